/**
 * Bundled gallery: demo faces shipped with precomputed parsing maps, so the
 * try-on works before the user uploads anything of their own.
 */

import { AssetRef } from './state.js';

export interface GalleryIndexEntry {
  name: string;
  image: string;
  parsing: string;
  kind: 'source' | 'reference';
}

export async function loadGalleryIndex(
  baseUrl = 'gallery',
  fetchImpl: typeof fetch = fetch,
): Promise<GalleryIndexEntry[]> {
  const response = await fetchImpl(`${baseUrl}/index.json`);
  if (!response.ok) {
    throw new Error(`gallery index unavailable (HTTP ${response.status})`);
  }
  return (await response.json()) as GalleryIndexEntry[];
}

export async function fetchGalleryAsset(
  entry: GalleryIndexEntry,
  baseUrl = 'gallery',
  fetchImpl: typeof fetch = fetch,
): Promise<AssetRef> {
  const [imageResp, parsingResp] = await Promise.all([
    fetchImpl(`${baseUrl}/${entry.image}`),
    fetchImpl(`${baseUrl}/${entry.parsing}`),
  ]);
  if (!imageResp.ok || !parsingResp.ok) {
    throw new Error(`gallery asset ${entry.name} failed to load`);
  }
  return {
    name: entry.name,
    image: await imageResp.blob(),
    parsing: await parsingResp.blob(),
  };
}
