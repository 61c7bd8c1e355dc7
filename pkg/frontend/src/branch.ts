/** Branch plot: trajectories in the (x, y) plane, fold and both branches. */

import { TrajectoryTable } from './csv';
import { HEIGHT, MARGIN, PALETTE, WIDTH, axes, document, legend,
         linearScale, polyline } from './svg';

export function renderBranch(tables: TrajectoryTable[]): string {
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
    return document('branch plot (no data)', axes(sx, sy, 'x', 'y'));
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
    // exact-branch envelope from the oracle-error column, when carried
    const withErr = t.rows.filter((r) => r.err !== null);
    if (withErr.length > 1 && !isExact) {
      parts.push(polyline(withErr.map((r) => [sx(r.x), sy(r.y - (r.err as number))]),
                          color, 0.6, '2,3'));
      parts.push(polyline(withErr.map((r) => [sx(r.x), sy(r.y + (r.err as number))]),
                          color, 0.6, '2,3'));
    }
    labels.push(t.label);
    colors.push(color);
  });
  parts.push(legend(labels, colors));
  return document('two-branch solution through the fold', parts.join('\n'));
}
