/**
 * DOM wiring for the try-on page. All transfer logic lives in state.ts /
 * api.ts; this layer renders state and forwards events.
 */

import { ApiClient, Component } from './api.js';
import { drawWipe, validateComparable, wipeRender } from './compare.js';
import { fetchGalleryAsset, loadGalleryIndex } from './gallery.js';
import { AssetRef, HistoryEntry, Session } from './state.js';

const API_BASE =
  new URLSearchParams(window.location.search).get('api') ??
  (window as { MAKEUPNET_API?: string }).MAKEUPNET_API ??
  'http://127.0.0.1:8000';

const session = new Session(new ApiClient(API_BASE));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, isError = false): void {
  const status = el<HTMLDivElement>('status');
  status.textContent = text;
  status.className = isError ? 'status error' : 'status';
}

async function assetFromInputs(
  name: string,
  imageInput: HTMLInputElement,
  parsingInput: HTMLInputElement,
): Promise<AssetRef | null> {
  const image = imageInput.files?.[0];
  if (!image) return null;
  const parsing = parsingInput.files?.[0] ?? null;
  return { name: `${name}:${image.name}`, image, parsing };
}

function showBlob(imgId: string, blob: Blob): void {
  const img = el<HTMLImageElement>(imgId);
  const url = URL.createObjectURL(blob);
  const previous = img.dataset.url;
  img.src = url;
  img.dataset.url = url;
  if (previous) URL.revokeObjectURL(previous);
}

function renderHistory(): void {
  const list = el<HTMLUListElement>('history');
  list.innerHTML = '';
  for (const entry of session.history) {
    const item = document.createElement('li');
    const label = document.createElement('span');
    label.textContent =
      `#${entry.index} ${entry.params.removal ? 'removal' : 'transfer'} ` +
      `[${entry.params.components.join(',') || 'none'}] ` +
      `global=${entry.params.globalEnabled} digest=${entry.resultDigest.slice(0, 10)}`;
    const view = document.createElement('button');
    view.textContent = 'view';
    view.onclick = () => showBlob('result', entry.resultBlob);
    const replay = document.createElement('button');
    replay.textContent = 'replay';
    replay.onclick = () => {
      void session
        .replay(entry.index)
        .then((fresh) => {
          showBlob('result', fresh.resultBlob);
          renderHistory();
          setStatus(
            fresh.resultDigest === entry.resultDigest
              ? `replayed #${entry.index}: digest identical`
              : `replayed #${entry.index}: digest CHANGED (checkpoint swapped?)`,
          );
        })
        .catch((err: Error) => setStatus(err.message, true));
    };
    item.append(label, view, replay);
    list.append(item);
  }
  const options = Array.from(session.history, (e) => e.index);
  for (const selId of ['compare-a', 'compare-b']) {
    const sel = el<HTMLSelectElement>(selId);
    const current = sel.value;
    sel.innerHTML = '';
    for (const idx of options) {
      const opt = document.createElement('option');
      opt.value = String(idx);
      opt.textContent = `#${idx}`;
      sel.append(opt);
    }
    if (current) sel.value = current;
  }
}

async function entryDimensions(entry: HistoryEntry): Promise<{
  bitmap: ImageBitmap;
  width: number;
  height: number;
}> {
  const bitmap = await createImageBitmap(entry.resultBlob);
  return { bitmap, width: bitmap.width, height: bitmap.height };
}

async function renderCompare(): Promise<void> {
  const a = session.history[Number(el<HTMLSelectElement>('compare-a').value)];
  const b = session.history[Number(el<HTMLSelectElement>('compare-b').value)];
  if (!a || !b) return;
  const [da, db] = await Promise.all([entryDimensions(a), entryDimensions(b)]);
  const check = validateComparable(da, db);
  if (!check.ok) {
    setStatus(check.reason!, true);
    return;
  }
  const fraction = Number(el<HTMLInputElement>('wipe').value) / 100;
  const canvas = el<HTMLCanvasElement>('compare-canvas');
  canvas.width = da.width;
  canvas.height = da.height;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  drawWipe(ctx, da.bitmap, db.bitmap, wipeRender(da, db, fraction));
}

function syncTogglesFromDom(): void {
  for (const com of ['lips', 'skin', 'eyes'] as Component[]) {
    session.toggles[com] = el<HTMLInputElement>(`toggle-${com}`).checked;
  }
  session.globalEnabled = el<HTMLInputElement>('toggle-global').checked;
  session.removal = el<HTMLInputElement>('toggle-removal').checked;
}

async function init(): Promise<void> {
  session.onStatus.push((event) => {
    if (event.status === 'queued') {
      setStatus(`queued behind ${event.queueLength - 1} running transfer(s)…`);
    } else if (event.status === 'running') {
      setStatus('transferring…');
    } else if (event.status === 'failed' && event.error) {
      setStatus(event.error, true);
    }
  });

  try {
    const entries = await loadGalleryIndex('gallery');
    const sourceSel = el<HTMLSelectElement>('gallery-source');
    const referenceSel = el<HTMLSelectElement>('gallery-reference');
    for (const entry of entries) {
      const opt = document.createElement('option');
      opt.value = entry.name;
      opt.textContent = entry.name;
      (entry.kind === 'source' ? sourceSel : referenceSel).append(opt);
    }
    const pick = async (sel: HTMLSelectElement, role: 'source' | 'reference') => {
      const entry = entries.find((e) => e.name === sel.value);
      if (!entry) return;
      const asset = await fetchGalleryAsset(entry, 'gallery');
      if (role === 'source') {
        session.source = asset;
        showBlob('source-preview', asset.image);
      } else {
        session.reference = asset;
        showBlob('reference-preview', asset.image);
      }
      setStatus(`${role} set to gallery face ${asset.name}`);
    };
    sourceSel.onchange = () => void pick(sourceSel, 'source');
    referenceSel.onchange = () => void pick(referenceSel, 'reference');
  } catch {
    setStatus('no bundled gallery found; upload images and parsing maps');
  }

  el<HTMLInputElement>('source-file').onchange = async () => {
    const asset = await assetFromInputs(
      'upload',
      el<HTMLInputElement>('source-file'),
      el<HTMLInputElement>('source-seg-file'),
    );
    if (asset) {
      session.source = asset;
      showBlob('source-preview', asset.image);
    }
  };
  el<HTMLInputElement>('reference-file').onchange = async () => {
    const asset = await assetFromInputs(
      'upload',
      el<HTMLInputElement>('reference-file'),
      el<HTMLInputElement>('reference-seg-file'),
    );
    if (asset) {
      session.reference = asset;
      showBlob('reference-preview', asset.image);
    }
  };

  el<HTMLButtonElement>('submit').onclick = () => {
    syncTogglesFromDom();
    const ready = session.readiness();
    if (!ready.ok) {
      setStatus(ready.reason!, true);
      return;
    }
    void session
      .submit()
      .then((entry) => {
        showBlob('result', entry.resultBlob);
        renderHistory();
        setStatus(`done (request ${entry.requestId ?? 'n/a'})`);
      })
      .catch((err: Error) => setStatus(err.message, true));
  };

  el<HTMLInputElement>('wipe').oninput = () => void renderCompare();
  el<HTMLSelectElement>('compare-a').onchange = () => void renderCompare();
  el<HTMLSelectElement>('compare-b').onchange = () => void renderCompare();

  const api = new ApiClient(API_BASE);
  const health = await api.health().catch(() => null);
  if (health && health.httpStatus === 200) {
    setStatus(`service ready (checkpoint ${health.checkpointId})`);
  } else {
    setStatus('service not reachable or no checkpoint loaded', true);
  }
}

void init();
