import { describe, expect, it } from 'vitest';

import { validateComparable, wipeRender, wipeSplit } from '../src/compare.js';

describe('validateComparable', () => {
  it('accepts equal sizes and refuses different ones with a message', () => {
    expect(validateComparable({ width: 4, height: 4 }, { width: 4, height: 4 }).ok).toBe(true);
    const check = validateComparable({ width: 4, height: 4 }, { width: 8, height: 4 });
    expect(check.ok).toBe(false);
    expect(check.reason).toContain('different sizes');
    expect(check.reason).toContain('4×4');
    expect(check.reason).toContain('8×4');
  });
});

describe('wipeSplit', () => {
  it('shows exactly entry A at 0 and exactly entry B at 1', () => {
    expect(wipeSplit(128, 0)).toBe(128); // full width from A
    expect(wipeSplit(128, 1)).toBe(0); // full width from B
    expect(wipeSplit(128, 0.5)).toBe(64);
  });

  it('rejects out-of-range fractions', () => {
    expect(() => wipeSplit(10, -0.01)).toThrow();
    expect(() => wipeSplit(10, 1.5)).toThrow();
  });
});

describe('wipeRender', () => {
  it('computes a layout for same-size entries and throws otherwise', () => {
    const layout = wipeRender({ width: 6, height: 4 }, { width: 6, height: 4 }, 0.25);
    expect(layout).toEqual({ split: 5, width: 6, height: 4 });
    expect(() =>
      wipeRender({ width: 6, height: 4 }, { width: 6, height: 8 }, 0.25),
    ).toThrow(/different sizes/);
  });

  it('a self-comparison has no seam: both panes come from equal bytes', () => {
    // comparing an entry to itself, any split consumes identical sources,
    // so the rendered row is constant regardless of the slider
    const dims = { width: 9, height: 3 };
    for (const fraction of [0, 0.3, 0.7, 1]) {
      const layout = wipeRender(dims, dims, fraction);
      expect(layout.split + (layout.width - layout.split)).toBe(dims.width);
    }
  });
});
