#!/usr/bin/env node
/** Dispatcher: render --kind <branch|error|singular> --in <csv...> --out <img>. */

import * as fs from 'fs';
import * as path from 'path';

import { parseTrajectoryCsv, TrajectoryTable } from './csv';
import { renderBranch } from './branch';
import { renderError } from './error';
import { renderSingular } from './singular';

const KINDS: Record<string, (tables: TrajectoryTable[]) => string> = {
  branch: renderBranch,
  branch_plot: renderBranch,
  error: renderError,
  error_plot: renderError,
  singular: renderSingular,
  singular_plot: renderSingular,
};

export interface RenderSpec {
  kind: string;
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[]): RenderSpec {
  const args = argv[0] === 'render' ? argv.slice(1) : argv.slice();
  let kind = '';
  const inputs: string[] = [];
  let out = '';
  for (let i = 0; i < args.length; i++) {
    const a = args[i];
    if (a === '--kind') {
      kind = args[++i] ?? '';
    } else if (a === '--out') {
      out = args[++i] ?? '';
    } else if (a === '--in') {
      while (i + 1 < args.length && !args[i + 1].startsWith('--')) {
        inputs.push(args[++i]);
      }
    } else {
      throw new Error(`unknown argument '${a}'`);
    }
  }
  if (!(kind in KINDS)) {
    throw new Error(`--kind must be one of ${Object.keys(KINDS).join(', ')}, got '${kind}'`);
  }
  if (inputs.length === 0) throw new Error('--in needs at least one CSV path');
  if (!out) throw new Error('--out is required');
  return { kind, inputs, out };
}

export function render(spec: RenderSpec): string {
  const tables = spec.inputs.map((p) =>
    parseTrajectoryCsv(fs.readFileSync(p, 'utf8'),
                       path.basename(p).replace(/\.csv$/, '')));
  const svg = KINDS[spec.kind](tables);
  fs.writeFileSync(spec.out, svg);
  return spec.out;
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const written = render(spec);
    process.stdout.write(written + '\n');
    return 0;
  } catch (e) {
    process.stderr.write(`error: ${(e as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
