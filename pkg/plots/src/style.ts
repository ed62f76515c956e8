import * as fs from "fs";
import * as path from "path";

import type { Color } from "./raster";

export interface Style {
  width: number;
  height: number;
  margin: number;
  background: Color;
  frame: Color;
  gridline: Color;
  series: Color;
  accent: Color;
  member: Color;
  nonmember: Color;
  text: Color;
  textScale: number;
}

/** Fixed styling from the package's style.json (reproducible CI artifacts). */
export function loadStyle(): Style {
  const p = path.join(__dirname, "..", "style.json");
  return JSON.parse(fs.readFileSync(p, "utf8")) as Style;
}
