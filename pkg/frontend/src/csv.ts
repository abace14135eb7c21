/** Minimal RFC-4180 CSV reader for the sweep file. */

export interface Table {
  header: string[];
  rows: string[][];
}

/** Parse CSV text into header and rows, honoring quoted fields. */
export function parseCsv(text: string): Table {
  const records: string[][] = [];
  let field = "";
  let record: string[] = [];
  let inQuotes = false;
  let i = 0;
  const pushField = () => {
    record.push(field);
    field = "";
  };
  const pushRecord = () => {
    pushField();
    records.push(record);
    record = [];
  };
  while (i < text.length) {
    const ch = text[i];
    if (inQuotes) {
      if (ch === '"') {
        if (text[i + 1] === '"') {
          field += '"';
          i += 2;
          continue;
        }
        inQuotes = false;
        i += 1;
        continue;
      }
      field += ch;
      i += 1;
      continue;
    }
    if (ch === '"') {
      inQuotes = true;
      i += 1;
    } else if (ch === ",") {
      pushField();
      i += 1;
    } else if (ch === "\r" && text[i + 1] === "\n") {
      pushRecord();
      i += 2;
    } else if (ch === "\n") {
      pushRecord();
      i += 1;
    } else {
      field += ch;
      i += 1;
    }
  }
  if (inQuotes) {
    throw new Error("malformed CSV: unterminated quoted field");
  }
  if (field.length > 0 || record.length > 0) {
    pushRecord();
  }
  if (records.length === 0) {
    throw new Error("empty CSV");
  }
  const [header, ...rows] = records;
  rows.forEach((row, index) => {
    if (row.length !== header.length) {
      throw new Error(
        `malformed CSV: row ${index + 2} has ${row.length} fields, ` +
        `header has ${header.length}`,
      );
    }
  });
  return { header, rows };
}

export const SWEEP_SCHEMA = [
  "n",
  "rho",
  "gibbs_risk",
  "w1_penalty",
  "complexity",
  "total_bound",
  "test_risk_nominal",
  "test_risk_shifted",
  "seed",
] as const;

export interface SweepRow {
  n: number;
  rho: number;
  gibbs_risk: number;
  w1_penalty: number;
  complexity: number;
  total_bound: number;
  test_risk_nominal: number;
  test_risk_shifted: number;
}

/** Validate the sweep schema and convert rows to numbers. */
export function readSweep(text: string): SweepRow[] {
  const table = parseCsv(text);
  const missing = SWEEP_SCHEMA.filter((c) => !table.header.includes(c));
  if (missing.length > 0) {
    throw new Error(
      `sweep CSV is missing column(s) ${missing.join(", ")}; ` +
      `expected schema: ${SWEEP_SCHEMA.join(", ")}`,
    );
  }
  const index = new Map(table.header.map((name, i) => [name, i]));
  const numeric = (row: string[], column: string): number => {
    const value = Number(row[index.get(column)!]);
    if (!Number.isFinite(value)) {
      throw new Error(`non-numeric value in column ${column}: ${row[index.get(column)!]}`);
    }
    return value;
  };
  return table.rows.map((row) => ({
    n: numeric(row, "n"),
    rho: numeric(row, "rho"),
    gibbs_risk: numeric(row, "gibbs_risk"),
    w1_penalty: numeric(row, "w1_penalty"),
    complexity: numeric(row, "complexity"),
    total_bound: numeric(row, "total_bound"),
    test_risk_nominal: numeric(row, "test_risk_nominal"),
    test_risk_shifted: numeric(row, "test_risk_shifted"),
  }));
}
