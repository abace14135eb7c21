/** Pull SVG elements of one tag out as attribute records. */
export function extractElements(
  svg: string,
  tag: string,
): Array<Record<string, string>> {
  const pattern = new RegExp(`<${tag} ([^>]*?)/?>`, "g");
  const out: Array<Record<string, string>> = [];
  for (const match of svg.matchAll(pattern)) {
    const attrs: Record<string, string> = {};
    for (const pair of match[1].matchAll(/([\w-]+)="([^"]*)"/g)) {
      attrs[pair[1]] = pair[2];
    }
    out.push(attrs);
  }
  return out;
}

export const HEADER =
  "n,rho,gibbs_risk,w1_penalty,complexity,total_bound," +
  "test_risk_nominal,test_risk_shifted,seed,config_hash";

export function sweepCsv(rows: Array<Array<number | string>>): string {
  return [HEADER, ...rows.map((r) => r.join(","))].join("\n") + "\n";
}
