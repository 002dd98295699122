/**
 * Session state: chosen assets, component toggles, and the append-only,
 * replayable result history. One transfer is in flight at a time; further
 * submissions queue behind it with a visible status.
 */

import {
  ApiClient,
  Component,
  TransferParams,
  TransferUploads,
} from './api.js';
import { blobDigest } from './digest.js';

export interface AssetRef {
  name: string;
  image: Blob;
  parsing: Blob | null;
}

export interface HistoryEntry {
  index: number;
  sourceName: string;
  referenceName: string;
  params: TransferParams;
  resultBlob: Blob;
  resultDigest: string;
  requestId: string | null;
}

export type SubmissionStatus = 'queued' | 'running' | 'done' | 'failed';

export interface StatusEvent {
  status: SubmissionStatus;
  queueLength: number;
  error?: string;
}

const ALL_COMPONENTS: Component[] = ['lips', 'skin', 'eyes'];

export class Session {
  source: AssetRef | null = null;
  reference: AssetRef | null = null;
  toggles: Record<Component, boolean> = { lips: true, skin: true, eyes: true };
  globalEnabled = true;
  removal = false;

  private readonly api: ApiClient;
  private readonly historyEntries: HistoryEntry[] = [];
  private tail: Promise<void> = Promise.resolve();
  private queueLength = 0;
  readonly onStatus: Array<(event: StatusEvent) => void> = [];

  constructor(api: ApiClient) {
    this.api = api;
  }

  /** Read-only view; the underlying list is append-only. */
  get history(): readonly HistoryEntry[] {
    return this.historyEntries;
  }

  /** The component toggles map one-to-one onto the request field. */
  selectedComponents(): Component[] {
    return ALL_COMPONENTS.filter((c) => this.toggles[c]);
  }

  currentParams(): TransferParams {
    return {
      components: this.selectedComponents(),
      globalEnabled: this.globalEnabled,
      removal: this.removal,
    };
  }

  /** Submission is refused, with a reason, until every input is present. */
  readiness(): { ok: boolean; reason?: string } {
    if (!this.source) return { ok: false, reason: 'choose a source image first' };
    if (!this.reference) return { ok: false, reason: 'choose a reference image first' };
    if (!this.source.parsing) {
      return {
        ok: false,
        reason: `source "${this.source.name}" has no parsing map; upload one or pick a gallery face`,
      };
    }
    if (!this.reference.parsing) {
      return {
        ok: false,
        reason: `reference "${this.reference.name}" has no parsing map; upload one or pick a gallery face`,
      };
    }
    return { ok: true };
  }

  private emit(event: StatusEvent): void {
    for (const listener of this.onStatus) listener(event);
  }

  private enqueue<T>(task: () => Promise<T>): Promise<T> {
    this.queueLength += 1;
    if (this.queueLength > 1) {
      this.emit({ status: 'queued', queueLength: this.queueLength });
    }
    const run = this.tail.then(async () => {
      this.emit({ status: 'running', queueLength: this.queueLength });
      try {
        return await task();
      } finally {
        this.queueLength -= 1;
      }
    });
    this.tail = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }

  private async execute(
    sourceName: string,
    referenceName: string,
    uploads: TransferUploads,
    params: TransferParams,
  ): Promise<HistoryEntry> {
    try {
      const result = await this.api.transfer(uploads, params);
      const entry: HistoryEntry = {
        index: this.historyEntries.length,
        sourceName,
        referenceName,
        params: {
          components: [...params.components],
          globalEnabled: params.globalEnabled,
          removal: params.removal,
        },
        resultBlob: result.blob,
        resultDigest: await blobDigest(result.blob),
        requestId: result.requestId,
      };
      this.historyEntries.push(entry);
      this.emit({ status: 'done', queueLength: this.queueLength });
      return entry;
    } catch (err) {
      this.emit({
        status: 'failed',
        queueLength: this.queueLength,
        error: err instanceof Error ? err.message : String(err),
      });
      throw err;
    }
  }

  /** Submit the current state; queues behind any in-flight transfer. */
  submit(): Promise<HistoryEntry> {
    const ready = this.readiness();
    if (!ready.ok) {
      return Promise.reject(new Error(ready.reason));
    }
    const source = this.source!;
    const reference = this.reference!;
    const uploads: TransferUploads = {
      source: source.image,
      reference: reference.image,
      sourceSeg: source.parsing!,
      referenceSeg: reference.parsing!,
    };
    const params = this.currentParams();
    return this.enqueue(() =>
      this.execute(source.name, reference.name, uploads, params),
    );
  }

  /**
   * Reissue the exact request of history entry k. The stored parameters are
   * used verbatim; with an unchanged checkpoint the response bytes are
   * identical, which the caller can verify through the digests.
   */
  replay(index: number): Promise<HistoryEntry> {
    const past = this.historyEntries[index];
    if (!past) {
      return Promise.reject(new Error(`no history entry ${index}`));
    }
    const ready = this.readiness();
    if (!ready.ok) {
      return Promise.reject(new Error(ready.reason));
    }
    const source = this.source!;
    const reference = this.reference!;
    if (source.name !== past.sourceName || reference.name !== past.referenceName) {
      return Promise.reject(
        new Error('replay requires the original source and reference assets'),
      );
    }
    const uploads: TransferUploads = {
      source: source.image,
      reference: reference.image,
      sourceSeg: source.parsing!,
      referenceSeg: reference.parsing!,
    };
    return this.enqueue(() =>
      this.execute(past.sourceName, past.referenceName, uploads, past.params),
    );
  }
}
