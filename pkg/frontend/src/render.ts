/** Recipe dispatch: load tables, resolve series, emit one SVG per recipe. */

import fs from "node:fs";
import path from "node:path";

import { DataError, getColumn, readTable, Table } from "./csv.js";
import { PanelSpec, renderFigure, Series } from "./figures.js";
import { parseRecipe, Recipe, SeriesRef } from "./recipe.js";

const X_LABELS: Record<string, string> = {
  timeseries: "omega_A t",
  equilibration: "omega_A t",
  flows: "omega_A t",
  profile: "site nu",
  sizescan: "subsystem size N_s",
};

function resolveSeries(refs: SeriesRef[], tables: Map<string, Table>, x: string): Series[] {
  return refs.map((ref) => {
    const table = tables.get(ref.input)!;
    return {
      label: ref.label,
      x: getColumn(table, x),
      y: getColumn(table, ref.column),
    };
  });
}

export function buildFigure(recipe: Recipe): string {
  const tables = new Map<string, Table>();
  for (const [name, file] of recipe.inputs) {
    tables.set(name, readTable(file));
  }
  const x = recipe.x!;
  const xLabel = X_LABELS[recipe.kind];
  const panels: PanelSpec[] = [];
  if (recipe.kind === "timeseries" || recipe.kind === "profile" || recipe.kind === "sizescan") {
    if (recipe.top.length > 0) {
      panels.push({
        series: resolveSeries(recipe.top, tables, x),
        xLabel,
        yLabel: recipe.top[0].column,
      });
    }
    if (recipe.bottom.length > 0) {
      panels.push({
        series: resolveSeries(recipe.bottom, tables, x),
        xLabel,
        yLabel: recipe.bottom[0].column,
      });
    }
  } else if (recipe.kind === "equilibration") {
    panels.push({
      series: resolveSeries(recipe.series, tables, x),
      xLabel,
      yLabel: "distance to GGE marginal",
      hline: recipe.epsilon,
    });
  } else {
    panels.push({
      series: resolveSeries(recipe.series, tables, x),
      xLabel,
      yLabel: "energy flow",
      hline: 0.0,
    });
  }
  if (panels.length === 0) {
    throw new DataError("recipe selected no columns to plot");
  }
  return renderFigure(panels, recipe.title);
}

export function renderRecipeFile(recipePath: string): string {
  const text = fs.readFileSync(recipePath, "utf8");
  const recipe = parseRecipe(text, path.dirname(path.resolve(recipePath)));
  const svg = buildFigure(recipe);
  fs.mkdirSync(path.dirname(recipe.output), { recursive: true });
  fs.writeFileSync(recipe.output, svg);
  return recipe.output;
}
