/** Error plot: per-point oracle error on a log axis, one curve per scheme. */

import { TrajectoryTable } from './csv';
import { HEIGHT, MARGIN, PALETTE, WIDTH, axes, document, legend,
         linearScale, polyline } from './svg';

const FLOOR = 1e-16;

export function renderError(tables: TrajectoryTable[]): string {
  const pts: Array<Array<[number, number]>> = [];
  const xs: number[] = [];
  const logs: number[] = [];
  for (const t of tables) {
    const series: Array<[number, number]> = [];
    for (const r of t.rows) {
      if (r.err === null) continue;
      const v = Math.log10(Math.max(r.err, FLOOR));
      series.push([r.x, v]);
      xs.push(r.x);
      logs.push(v);
    }
    pts.push(series);
  }
  if (xs.length === 0) {
    const sx = linearScale(0, 1, MARGIN.left, WIDTH - MARGIN.right);
    const sy = linearScale(-16, 0, HEIGHT - MARGIN.bottom, MARGIN.top);
    return document('error plot (no data)',
                    axes(sx, sy, 'x', 'error vs reference',
                         (v) => `1e${Math.round(v)}`));
  }
  const sx = linearScale(Math.min(...xs), Math.max(...xs),
                         MARGIN.left, WIDTH - MARGIN.right);
  const lo = Math.floor(Math.min(...logs));
  const hi = Math.ceil(Math.max(...logs));
  const sy = linearScale(lo, hi, HEIGHT - MARGIN.bottom, MARGIN.top);
  const parts: string[] = [
    axes(sx, sy, 'x', 'error vs reference', (v) => `1e${Math.round(v)}`),
  ];
  const labels: string[] = [];
  const colors: string[] = [];
  tables.forEach((t, i) => {
    const color = PALETTE[i % PALETTE.length];
    parts.push(polyline(pts[i].map(([x, v]) => [sx(x), sy(v)]), color, 1.8));
    labels.push(t.label);
    colors.push(color);
  });
  parts.push(legend(labels, colors));
  return document('discretization error comparison', parts.join('\n'));
}
