#!/usr/bin/env node
/**
 * plotkit CLI: render quenchkit CSV outputs into SVG figures.
 *
 *   plotkit render --recipe path/to/figure.recipe
 *
 * Exit codes: 0 ok, 1 data error (missing column, empty table),
 * 2 usage/recipe error, 3 I/O error.
 */

import { parseArgs } from "node:util";

import { DataError } from "./csv.js";
import { RecipeError } from "./recipe.js";
import { renderRecipeFile } from "./render.js";

export function main(argv: string[]): number {
  let positionals: string[];
  let values: { recipe?: string; quiet?: boolean };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        recipe: { type: "string" },
        quiet: { type: "boolean", default: false },
      },
    }));
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  if (positionals.length !== 1 || positionals[0] !== "render" || !values.recipe) {
    console.error("usage: plotkit render --recipe <path>");
    return 2;
  }
  try {
    const output = renderRecipeFile(values.recipe);
    if (!values.quiet) console.log(`wrote ${output}`);
    return 0;
  } catch (err) {
    if (err instanceof RecipeError) {
      console.error(`recipe error: ${err.message}`);
      return 2;
    }
    if (err instanceof DataError) {
      console.error(`data error: ${err.message}`);
      return 1;
    }
    if ((err as NodeJS.ErrnoException).code !== undefined) {
      console.error(`i/o error: ${(err as Error).message}`);
      return 3;
    }
    throw err;
  }
}

import { fileURLToPath } from "node:url";
import process from "node:process";

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
