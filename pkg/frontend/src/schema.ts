/**
 * Sweep CSV contract.
 *
 * The simulator emits one row per measurement-strength point with exactly
 * these columns, in exactly this order.  Anything else is a schema error:
 * the plot must fail loudly rather than guess at permuted columns.
 */

export const EXPECTED_COLUMNS = [
  "gamma1_over_gamma0",
  "var_internal",
  "var_internal_stderr",
  "var_photocurrent",
  "var_photocurrent_stderr",
  "mean_n",
  "mean_n_stderr",
  "clamp_mass_max",
  "tail_mass_max",
  "n_traj_failed",
] as const;

export interface SweepRow {
  gamma1OverGamma0: number;
  varInternal: number;
  varInternalStderr: number;
  varPhotocurrent: number;
  varPhotocurrentStderr: number;
  meanN: number;
  meanNStderr: number;
  clampMassMax: number;
  tailMassMax: number;
  nTrajFailed: number;
}

export class SchemaError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaError";
  }
}

/** Strict numeric cell: finite float, or literal nan (failed points). */
function parseCell(raw: string, column: string, line: number): number {
  const text = raw.trim();
  if (text.toLowerCase() === "nan") return NaN;
  const value = Number(text);
  if (text === "" || Number.isNaN(value)) {
    throw new SchemaError(
      `line ${line}: column ${column} is not numeric: ${JSON.stringify(raw)}`
    );
  }
  return value;
}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty input");
  }
  const header = lines[0].split(",").map((c) => c.trim());
  if (
    header.length !== EXPECTED_COLUMNS.length ||
    header.some((name, i) => name !== EXPECTED_COLUMNS[i])
  ) {
    throw new SchemaError(
      `header mismatch: expected exactly [${EXPECTED_COLUMNS.join(", ")}], ` +
        `got [${header.join(", ")}]`
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("no data rows");
  }

  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== EXPECTED_COLUMNS.length) {
      throw new SchemaError(
        `line ${i + 1}: expected ${EXPECTED_COLUMNS.length} cells, ` +
          `got ${cells.length}`
      );
    }
    const num = (j: number) => parseCell(cells[j], EXPECTED_COLUMNS[j], i + 1);
    const row: SweepRow = {
      gamma1OverGamma0: num(0),
      varInternal: num(1),
      varInternalStderr: num(2),
      varPhotocurrent: num(3),
      varPhotocurrentStderr: num(4),
      meanN: num(5),
      meanNStderr: num(6),
      clampMassMax: num(7),
      tailMassMax: num(8),
      nTrajFailed: num(9),
    };
    if (!(row.gamma1OverGamma0 > 0)) {
      throw new SchemaError(
        `line ${i + 1}: gamma1_over_gamma0 must be a positive number ` +
          `(log axis), got ${cells[0]}`
      );
    }
    rows.push(row);
  }
  return rows.sort((a, b) => a.gamma1OverGamma0 - b.gamma1OverGamma0);
}
