import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, describe, expect, it } from "vitest";

import { DataError, getColumn, readTable } from "../src/csv.js";
import { niceTicks } from "../src/figures.js";
import { main } from "../src/cli.js";
import { renderRecipeFile } from "../src/render.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const RUN = path.join(HERE, "fixtures", "run");
const TMP = fs.mkdtempSync(path.join(os.tmpdir(), "plotkit-"));

afterAll(() => fs.rmSync(TMP, { recursive: true, force: true }));

function writeRecipe(name: string, text: string): string {
  const p = path.join(TMP, name);
  fs.writeFileSync(p, text);
  return p;
}

describe("csv reading", () => {
  it("reads the trajectory fixture with empty cells as NaN", () => {
    const t = readTable(path.join(RUN, "trajectory.csv"));
    expect(t.columns[0]).toBe("t");
    expect(t.rows).toBe(40);
    const fg = getColumn(t, "A_f_global");
    expect(Number.isNaN(fg[1])).toBe(true); // strided column
    expect(Number.isFinite(fg[0])).toBe(true);
  });

  it("lists available columns on a miss", () => {
    const t = readTable(path.join(RUN, "trajectory.csv"));
    expect(() => getColumn(t, "nope")).toThrow(/available columns: t, a_f_max/);
  });

  it("rejects a header-only file", () => {
    const p = path.join(TMP, "empty.csv");
    fs.writeFileSync(p, "t,x\n");
    expect(() => readTable(p)).toThrow(/no data rows/);
  });
});

describe("tick placement", () => {
  it("produces round ticks covering the range", () => {
    const ticks = niceTicks(0, 300);
    expect(ticks[0]).toBeGreaterThanOrEqual(0);
    expect(ticks[ticks.length - 1]).toBeLessThanOrEqual(300);
    expect(ticks.length).toBeGreaterThanOrEqual(3);
  });

  it("handles degenerate ranges", () => {
    expect(niceTicks(1, 1).length).toBeGreaterThan(0);
  });
});

describe("figure kinds render from real CLI outputs", () => {
  const cases: Array<[string, string]> = [
    [
      "timeseries.recipe",
      `kind = timeseries\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/ts.svg\n` +
        "top = a_f_max, b_f_max\nbottom = a_t_eff, b_t_eff\ntitle = local thermality\n",
    ],
    [
      "profile.recipe",
      `kind = profile\ninput.a = ${RUN}/profile_sliding_A_t30.csv\ninput.b = ${RUN}/profile_sliding_B_t30.csv\noutput = ${TMP}/prof.svg\n`,
    ],
    [
      "sizescan.recipe",
      `kind = sizescan\ninput.a = ${RUN}/profile_growing_A_t30.csv\ninput.b = ${RUN}/profile_growing_B_t30.csv\noutput = ${TMP}/size.svg\n`,
    ],
    [
      "equilibration.recipe",
      `kind = equilibration\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/eq.svg\nseries = a_d_gge, b_d_gge\nepsilon = 0.02\n`,
    ],
    [
      "flows.recipe",
      `kind = flows\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/flows.svg\n`,
    ],
  ];

  for (const [name, text] of cases) {
    it(`renders ${name.split(".")[0]}`, () => {
      const out = renderRecipeFile(writeRecipe(name, text));
      const svg = fs.readFileSync(out, "utf8");
      expect(svg.startsWith("<svg ")).toBe(true);
      expect(svg).toContain("<polyline");
      expect(svg.endsWith("</svg>")).toBe(true);
    });
  }

  it("renders strided columns by skipping absent samples", () => {
    const out = renderRecipeFile(
      writeRecipe(
        "strided.recipe",
        `kind = timeseries\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/strided.svg\ntop = A_f_global, B_f_global\n`,
      ),
    );
    expect(fs.readFileSync(out, "utf8")).toContain("<circle");
  });

  it("is deterministic", () => {
    const p = writeRecipe(
      "det.recipe",
      `kind = flows\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/det.svg\n`,
    );
    renderRecipeFile(p);
    const first = fs.readFileSync(path.join(TMP, "det.svg"), "utf8");
    renderRecipeFile(p);
    expect(fs.readFileSync(path.join(TMP, "det.svg"), "utf8")).toBe(first);
  });

  it("fails with the documented diagnostic on missing columns", () => {
    const p = writeRecipe(
      "bad.recipe",
      `kind = timeseries\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/bad.svg\ntop = not_a_column\n`,
    );
    expect(() => renderRecipeFile(p)).toThrow(DataError);
    expect(() => renderRecipeFile(p)).toThrow(/available columns/);
  });
});

describe("cli", () => {
  it("renders via main() and reports exit codes", () => {
    const p = writeRecipe(
      "cli.recipe",
      `kind = flows\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/cli.svg\n`,
    );
    expect(main(["render", "--recipe", p, "--quiet"])).toBe(0);
    expect(fs.existsSync(path.join(TMP, "cli.svg"))).toBe(true);
    expect(main(["render"])).toBe(2);
    expect(main(["bogus", "--recipe", p])).toBe(2);
    const bad = writeRecipe(
      "cli-bad.recipe",
      `kind = flows\ninput = ${RUN}/trajectory.csv\noutput = ${TMP}/x.svg\nseries = zzz\n`,
    );
    expect(main(["render", "--recipe", bad, "--quiet"])).toBe(1);
    const badKind = writeRecipe("cli-kind.recipe", "kind = pie\n");
    expect(main(["render", "--recipe", badKind, "--quiet"])).toBe(2);
  });
});
