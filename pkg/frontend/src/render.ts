// Command line entry point: render <spec.json>
//
// The spec file describes one figure: kind, input CSV path(s), output image
// path, optional width/height/title/axis scales.  Relative paths inside the
// spec are resolved against the spec file's directory, so a spec can live
// next to its data.  The output is a standalone SVG written to "out".

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { pathToFileURL } from "node:url";
import { renderFigure, FigureSpec } from "./figures.js";

export function main(argv: string[]): number {
  const specPath = argv[0];
  if (!specPath || argv.length !== 1) {
    console.error("usage: render <spec.json>");
    return 2;
  }
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(specPath, "utf8"));
  } catch (err) {
    console.error(`cannot read spec ${specPath}: ${(err as Error).message}`);
    return 2;
  }
  try {
    const baseDir = dirname(resolve(specPath));
    const figure = renderFigure(raw, baseDir);
    const outPath = resolve(baseDir, (raw as FigureSpec).out);
    mkdirSync(dirname(outPath), { recursive: true });
    writeFileSync(outPath, figure.svg, "utf8");
    console.log(`wrote ${outPath} (${figure.width}x${figure.height})`);
    return 0;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
