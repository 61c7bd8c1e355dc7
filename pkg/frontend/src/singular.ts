/** Singular-trajectory plot: the path into the fold, closest approach marked. */

import { TrajectoryTable } from './csv';
import { HEIGHT, MARGIN, PALETTE, WIDTH, axes, document, fmt, legend,
         linearScale, polyline } from './svg';

export function renderSingular(tables: TrajectoryTable[]): string {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const t of tables) {
    for (const r of t.rows) {
      xs.push(r.x);
      ys.push(r.y);
    }
  }
  if (xs.length === 0) {
    const sx = linearScale(0, 1, MARGIN.left, WIDTH - MARGIN.right);
    const sy = linearScale(0, 1, HEIGHT - MARGIN.bottom, MARGIN.top);
    return document('singular trajectory (no data)', axes(sx, sy, 'x', 'y'));
  }
  const sx = linearScale(Math.min(...xs), Math.max(...xs),
                         MARGIN.left, WIDTH - MARGIN.right);
  const pad = 0.05 * (Math.max(...ys) - Math.min(...ys) || 1);
  const sy = linearScale(Math.min(...ys) - pad, Math.max(...ys) + pad,
                         HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [axes(sx, sy, 'x', 'y')];
  const labels: string[] = [];
  const colors: string[] = [];
  tables.forEach((t, i) => {
    const color = PALETTE[i % PALETTE.length];
    const isExact = t.label.includes('exact');
    parts.push(polyline(t.rows.map((r) => [sx(r.x), sy(r.y)]), color,
                        isExact ? 1.0 : 1.8, isExact ? '5,4' : ''));
    labels.push(t.label);
    colors.push(color);
    if (!isExact && t.rows.length > 0) {
      // closest approach: the maximal x reached
      let best = t.rows[0];
      for (const r of t.rows) if (r.x > best.x) best = r;
      const px = sx(best.x);
      parts.push(`<line x1="${px.toFixed(2)}" y1="${MARGIN.top}" x2="${px.toFixed(2)}" y2="${HEIGHT - MARGIN.bottom}" stroke="${color}" stroke-width="0.8" stroke-dasharray="3,4"/>`);
      parts.push(`<circle cx="${px.toFixed(2)}" cy="${sy(best.y).toFixed(2)}" r="4" fill="${color}"/>`);
      parts.push(`<text x="${(px - 6).toFixed(2)}" y="${MARGIN.top + 12}" font-size="12" text-anchor="end" font-family="sans-serif">x_closest = ${fmt(best.x)}</text>`);
    }
  });
  parts.push(legend(labels, colors));
  return document('singular trajectory and branch switch', parts.join('\n'));
}
