/**
 * Plot recipes use the same flat key-value format as experiment configs:
 *
 *   kind = timeseries
 *   input = runs/fig3/trajectory.csv
 *   output = fig3.svg
 *   top = a_f_max, b_f_max
 *   bottom = a_t_eff, b_t_eff
 *
 * Multiple input files get names: `input.a = ...` and series references
 * become `a:column`.  Relative paths are resolved against the recipe file.
 */

import path from "node:path";

export type FigureKind =
  | "timeseries"
  | "profile"
  | "sizescan"
  | "equilibration"
  | "flows";

export interface SeriesRef {
  input: string;
  column: string;
  label: string;
}

export interface Recipe {
  kind: FigureKind;
  output: string;
  inputs: Map<string, string>;
  x?: string;
  top: SeriesRef[];
  bottom: SeriesRef[];
  series: SeriesRef[];
  epsilon?: number;
  title?: string;
}

export class RecipeError extends Error {}

const KINDS: FigureKind[] = [
  "timeseries",
  "profile",
  "sizescan",
  "equilibration",
  "flows",
];

export function parseFlat(text: string): Map<string, string> {
  const entries = new Map<string, string>();
  text.split(/\r?\n/).forEach((raw, i) => {
    const line = raw.split("#", 1)[0].trim();
    if (!line) return;
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new RecipeError(`line ${i + 1}: expected 'key = value', got ${raw.trim()}`);
    }
    entries.set(line.slice(0, eq).trim().toLowerCase(), line.slice(eq + 1).trim());
  });
  return entries;
}

function parseRefs(value: string, inputs: Map<string, string>): SeriesRef[] {
  return value
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => {
      const colon = part.indexOf(":");
      if (colon >= 0) {
        const input = part.slice(0, colon).trim();
        const column = part.slice(colon + 1).trim();
        if (!inputs.has(input)) {
          throw new RecipeError(
            `series '${part}' references unknown input '${input}' (have: ${[...inputs.keys()].join(", ")})`,
          );
        }
        return { input, column, label: part };
      }
      if (inputs.size === 1) {
        const input = [...inputs.keys()][0];
        return { input, column: part, label: part };
      }
      throw new RecipeError(
        `series '${part}' needs an 'input:column' prefix when several inputs are declared`,
      );
    });
}

export function parseRecipe(text: string, recipeDir: string): Recipe {
  const entries = parseFlat(text);
  const consumed = new Set<string>();
  const take = (key: string): string | undefined => {
    consumed.add(key);
    return entries.get(key);
  };

  const kindRaw = take("kind");
  if (!kindRaw || !KINDS.includes(kindRaw as FigureKind)) {
    throw new RecipeError(`kind must be one of ${KINDS.join(" | ")}, got '${kindRaw ?? ""}'`);
  }
  const kind = kindRaw as FigureKind;
  const output = take("output");
  if (!output) throw new RecipeError("output is required");

  const inputs = new Map<string, string>();
  const single = take("input");
  if (single !== undefined) inputs.set("main", path.resolve(recipeDir, single));
  for (const key of entries.keys()) {
    if (key.startsWith("input.")) {
      consumed.add(key);
      inputs.set(key.slice("input.".length), path.resolve(recipeDir, entries.get(key)!));
    }
  }
  if (inputs.size === 0) throw new RecipeError("at least one input CSV is required");

  const refs = (key: string, fallback: string): SeriesRef[] => {
    const raw = take(key);
    if (raw !== undefined) return parseRefs(raw, inputs);
    if (!fallback) return [];
    // fallback column applied to every input, labelled by input name
    return [...inputs.keys()].map((name) => ({
      input: name,
      column: fallback,
      label: inputs.size === 1 ? fallback : `${name}:${fallback}`,
    }));
  };

  let top: SeriesRef[] = [];
  let bottom: SeriesRef[] = [];
  let series: SeriesRef[] = [];
  if (kind === "timeseries") {
    top = refs("top", "");
    bottom = refs("bottom", "");
    if (top.length === 0) throw new RecipeError("timeseries requires 'top = <columns>'");
  } else if (kind === "profile" || kind === "sizescan") {
    top = refs("top", "f_max");
    bottom = refs("bottom", "t_eff");
  } else {
    series = refs("series", kind === "flows" ? "" : "");
    if (series.length === 0) {
      if (kind === "flows") {
        series = parseRefs("Qdot_A, Qdot_B, Edot_int", inputs);
      } else {
        throw new RecipeError("equilibration requires 'series = <distance columns>'");
      }
    }
  }

  const epsilonRaw = take("epsilon");
  const epsilon = epsilonRaw === undefined ? undefined : Number(epsilonRaw);
  if (epsilon !== undefined && !Number.isFinite(epsilon)) {
    throw new RecipeError(`epsilon must be a number, got '${epsilonRaw}'`);
  }
  const title = take("title");
  const xRaw = take("x");

  const unknown = [...entries.keys()].filter((k) => !consumed.has(k) && !k.startsWith("input."));
  if (unknown.length > 0) {
    throw new RecipeError(`unknown recipe keys: ${unknown.join(", ")}`);
  }

  return {
    kind,
    output: path.resolve(recipeDir, output),
    inputs,
    x: xRaw ?? (kind === "profile" || kind === "sizescan" ? "nu" : "t"),
    top,
    bottom,
    series,
    epsilon,
    title,
  };
}
