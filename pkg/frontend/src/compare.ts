/**
 * Pixel-aligned comparison of two history entries with a wipe slider.
 * The arithmetic lives here so it can be tested without a DOM; rendering
 * is a thin canvas layer on top.
 */

export interface Dimensions {
  width: number;
  height: number;
}

export function validateComparable(
  a: Dimensions,
  b: Dimensions,
): { ok: boolean; reason?: string } {
  if (a.width !== b.width || a.height !== b.height) {
    return {
      ok: false,
      reason:
        `entries have different sizes (${a.width}×${a.height} vs ` +
        `${b.width}×${b.height}); comparison needs the same source resolution`,
    };
  }
  return { ok: true };
}

/**
 * Width in pixels of the left pane (entry A) for a slider position in
 * [0, 1]. At 0 the view is exactly entry A, at 1 exactly entry B.
 */
export function wipeSplit(width: number, fraction: number): number {
  if (!(fraction >= 0 && fraction <= 1)) {
    throw new Error(`slider fraction must be in [0, 1], got ${fraction}`);
  }
  return Math.round(width * (1 - fraction));
}

export interface WipeRender {
  /** columns [0, split) come from A, [split, width) from B */
  split: number;
  width: number;
  height: number;
}

export function wipeRender(
  a: Dimensions,
  b: Dimensions,
  fraction: number,
): WipeRender {
  const check = validateComparable(a, b);
  if (!check.ok) throw new Error(check.reason);
  return {
    split: wipeSplit(a.width, fraction),
    width: a.width,
    height: a.height,
  };
}

/** Draw the wipe onto a canvas context (browser-only helper). */
export function drawWipe(
  ctx: CanvasRenderingContext2D,
  imageA: CanvasImageSource,
  imageB: CanvasImageSource,
  layout: WipeRender,
): void {
  ctx.clearRect(0, 0, layout.width, layout.height);
  if (layout.split > 0) {
    ctx.drawImage(
      imageA,
      0, 0, layout.split, layout.height,
      0, 0, layout.split, layout.height,
    );
  }
  if (layout.split < layout.width) {
    const right = layout.width - layout.split;
    ctx.drawImage(
      imageB,
      layout.split, 0, right, layout.height,
      layout.split, 0, right, layout.height,
    );
  }
}
