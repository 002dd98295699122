/**
 * HTTP client for the makeup transfer service.
 * Talks only to the documented API; the base URL is configurable.
 */

export type Component = 'lips' | 'skin' | 'eyes';

export interface TransferParams {
  components: Component[];
  globalEnabled: boolean;
  removal: boolean;
}

export interface TransferUploads {
  source: Blob;
  reference: Blob;
  sourceSeg: Blob;
  referenceSeg: Blob;
}

export interface TransferResult {
  blob: Blob;
  requestId: string | null;
  status: number;
}

export interface HealthInfo {
  status: string;
  checkpointId: string | null;
  modelVersion: number | null;
  imageSize: number | null;
  httpStatus: number;
}

/** Server-reported failure; the reason is surfaced verbatim. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, reason: string) {
    super(`HTTP ${status}: ${reason}`);
    this.status = status;
  }
}

type FetchLike = typeof fetch;

export function componentsField(components: Component[]): string {
  return components.join(',');
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
    this.baseUrl = baseUrl.replace(/\/+$/, '');
    this.fetchImpl = fetchImpl;
  }

  buildForm(uploads: TransferUploads, params: TransferParams): FormData {
    const form = new FormData();
    form.append('source', uploads.source, 'source.png');
    form.append('reference', uploads.reference, 'reference.png');
    form.append('source_seg', uploads.sourceSeg, 'source_seg.png');
    form.append('reference_seg', uploads.referenceSeg, 'reference_seg.png');
    form.append('components', componentsField(params.components));
    form.append('global', params.globalEnabled ? 'true' : 'false');
    form.append('removal', params.removal ? 'true' : 'false');
    return form;
  }

  async transfer(
    uploads: TransferUploads,
    params: TransferParams,
  ): Promise<TransferResult> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1/transfer`, {
      method: 'POST',
      body: this.buildForm(uploads, params),
    });
    if (!response.ok) {
      let reason = response.statusText || 'request failed';
      try {
        const body = (await response.json()) as { error?: string };
        if (body && body.error) reason = body.error;
      } catch {
        /* non-JSON error body: keep the status text */
      }
      throw new ApiError(response.status, reason);
    }
    return {
      blob: await response.blob(),
      requestId: response.headers.get('X-Request-Id'),
      status: response.status,
    };
  }

  async health(): Promise<HealthInfo> {
    const response = await this.fetchImpl(`${this.baseUrl}/api/v1/health`);
    let body: Record<string, unknown> = {};
    try {
      body = (await response.json()) as Record<string, unknown>;
    } catch {
      /* tolerate empty bodies */
    }
    return {
      status: typeof body.status === 'string' ? body.status : 'unavailable',
      checkpointId: (body.checkpoint_id as string) ?? null,
      modelVersion: (body.model_version as number) ?? null,
      imageSize: (body.image_size as number) ?? null,
      httpStatus: response.status,
    };
  }
}
