/** Deterministic SVG scaffolding: fixed canvas, fixed styling, no timestamps. */

export const WIDTH = 800;
export const HEIGHT = 560;
export const MARGIN = { left: 72, right: 24, top: 28, bottom: 52 };

export const PALETTE = ['#1f6fb2', '#c44f2a', '#3a8f4d', '#7a4fb0', '#a08020'];

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(lo: number, hi: number, out0: number, out1: number): Scale {
  if (!(hi > lo)) hi = lo + 1;
  const f = ((v: number) => out0 + ((v - lo) / (hi - lo)) * (out1 - out0)) as Scale;
  f.domain = [lo, hi];
  return f;
}

export function fmt(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) {
    return String(Number(v.toPrecision(6)));
  }
  return v.toExponential(3);
}

export function polyline(points: Array<[number, number]>, color: string,
                         width = 1.6, dash = ''): string {
  if (points.length === 0) return '';
  const pts = points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(' ');
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : '';
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}"${dashAttr} points="${pts}"/>`;
}

export function ticks(lo: number, hi: number, n = 6): number[] {
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(lo + ((hi - lo) * i) / n);
  return out;
}

export function axes(sx: Scale, sy: Scale, xLabel: string, yLabel: string,
                     yTickFmt: (v: number) => string = fmt): string {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  const parts: string[] = [];
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="#333" stroke-width="1"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="#333" stroke-width="1"/>`);
  for (const t of ticks(sx.domain[0], sx.domain[1])) {
    const px = sx(t);
    parts.push(`<line x1="${px.toFixed(2)}" y1="${y0}" x2="${px.toFixed(2)}" y2="${y0 + 5}" stroke="#333" stroke-width="1"/>`);
    parts.push(`<text x="${px.toFixed(2)}" y="${y0 + 20}" font-size="12" text-anchor="middle" font-family="sans-serif">${fmt(t)}</text>`);
  }
  for (const t of ticks(sy.domain[0], sy.domain[1])) {
    const py = sy(t);
    parts.push(`<line x1="${x0 - 5}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#333" stroke-width="1"/>`);
    parts.push(`<text x="${x0 - 8}" y="${(py + 4).toFixed(2)}" font-size="12" text-anchor="end" font-family="sans-serif">${yTickFmt(t)}</text>`);
  }
  parts.push(`<text x="${(x0 + x1) / 2}" y="${HEIGHT - 14}" font-size="13" text-anchor="middle" font-family="sans-serif">${xLabel}</text>`);
  parts.push(`<text x="18" y="${(y0 + y1) / 2}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 18 ${(y0 + y1) / 2})">${yLabel}</text>`);
  return parts.join('\n');
}

export function legend(labels: string[], colors: string[]): string {
  const parts: string[] = [];
  labels.forEach((label, i) => {
    const y = MARGIN.top + 16 + 18 * i;
    const x = WIDTH - MARGIN.right - 220;
    parts.push(`<line x1="${x}" y1="${y - 4}" x2="${x + 26}" y2="${y - 4}" stroke="${colors[i]}" stroke-width="2"/>`);
    parts.push(`<text x="${x + 32}" y="${y}" font-size="12" font-family="sans-serif">${label}</text>`);
  });
  return parts.join('\n');
}

export function document(title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="18" font-size="14" text-anchor="middle" font-family="sans-serif">${title}</text>`,
    body,
    '</svg>',
    '',
  ].join('\n');
}
