/** Reader for the sl2ode harness CSV schema. */

export const EXPECTED_HEADER = ['n', 'x', 'y', 'I1', 'I2_or_J', 'err_vs_oracle'];

export interface TrajectoryRow {
  n: number;
  x: number;
  y: number;
  I1: number | null;
  I2orJ: number | null;
  err: number | null;
}

export interface TrajectoryTable {
  /** Basename-ish label used in legends. */
  label: string;
  rows: TrajectoryRow[];
}

function parseOptional(field: string): number | null {
  if (field === '') return null;
  const v = Number(field);
  if (Number.isNaN(v)) throw new Error(`unparseable numeric field: '${field}'`);
  return v;
}

/** Parse one harness CSV; rejects files whose header misses a column. */
export function parseTrajectoryCsv(text: string, label: string): TrajectoryTable {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new Error(`${label}: empty file, expected header '${EXPECTED_HEADER.join(',')}'`);
  }
  const header = lines[0].split(',');
  for (const col of EXPECTED_HEADER) {
    if (!header.includes(col)) {
      throw new Error(`${label}: missing required column '${col}'`);
    }
  }
  const idx = EXPECTED_HEADER.map((c) => header.indexOf(c));
  const rows: TrajectoryRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(',');
    rows.push({
      n: Number(parts[idx[0]]),
      x: Number(parts[idx[1]]),
      y: Number(parts[idx[2]]),
      I1: parseOptional(parts[idx[3]] ?? ''),
      I2orJ: parseOptional(parts[idx[4]] ?? ''),
      err: parseOptional(parts[idx[5]] ?? ''),
    });
  }
  return { label, rows };
}
