export { parseTrajectoryCsv, EXPECTED_HEADER } from './csv';
export type { TrajectoryRow, TrajectoryTable } from './csv';
export { renderBranch } from './branch';
export { renderError } from './error';
export { renderSingular } from './singular';
export { parseArgs, render, main } from './cli';
export type { RenderSpec } from './cli';
