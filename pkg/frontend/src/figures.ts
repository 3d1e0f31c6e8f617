/** SVG figure assembly: panels, axes, polylines, legends. Pure string building. */

export interface Series {
  label: string;
  x: Float64Array;
  y: Float64Array;
}

export interface PanelSpec {
  series: Series[];
  xLabel: string;
  yLabel: string;
  hline?: number; // dashed reference line (epsilon band, zero line)
}

const WIDTH = 760;
const PANEL_HEIGHT = 300;
const MARGIN = { left: 72, right: 24, top: 34, bottom: 46 };
const COLORS = ["#c0392b", "#2464a4", "#1e8449", "#8e44ad", "#b7950b", "#566573"];

function fmt(v: number): string {
  if (!Number.isFinite(v)) return "0";
  return Number(v.toPrecision(6)).toString();
}

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.5 : 0.5;
    lo -= pad;
    hi += pad;
  }
  const span = hi - lo;
  const step0 = span / Math.max(count - 1, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((s) => span / s <= count) ?? candidates[candidates.length - 1];
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Number(v.toPrecision(12)));
  }
  return ticks;
}

interface Extent {
  lo: number;
  hi: number;
}

function extent(values: Iterable<number>, include?: number): Extent {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (include !== undefined && Number.isFinite(include)) {
    lo = Math.min(lo, include);
    hi = Math.max(hi, include);
  }
  if (lo === Infinity) {
    lo = 0;
    hi = 1;
  }
  if (lo === hi) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 0.05 : 0.5;
    lo -= pad;
    hi += pad;
  }
  const pad = (hi - lo) * 0.04;
  return { lo: lo - pad, hi: hi + pad };
}

function renderPanel(spec: PanelSpec, yOffset: number, showLegend: boolean): string {
  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = PANEL_HEIGHT - MARGIN.top - MARGIN.bottom;
  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of spec.series) {
    for (let i = 0; i < s.x.length; i++) {
      if (Number.isFinite(s.x[i]) && Number.isFinite(s.y[i])) {
        xs.push(s.x[i]);
        ys.push(s.y[i]);
      }
    }
  }
  const ex = extent(xs);
  const ey = extent(ys, spec.hline);
  const sx = (v: number) => MARGIN.left + ((v - ex.lo) / (ex.hi - ex.lo)) * plotW;
  const sy = (v: number) =>
    yOffset + MARGIN.top + plotH - ((v - ey.lo) / (ey.hi - ey.lo)) * plotH;

  const parts: string[] = [];
  const axisY0 = yOffset + MARGIN.top;
  parts.push(
    `<rect x="${MARGIN.left}" y="${axisY0}" width="${plotW}" height="${plotH}" fill="none" stroke="#444" stroke-width="1"/>`,
  );
  for (const t of niceTicks(ex.lo, ex.hi)) {
    const px = sx(t);
    if (px < MARGIN.left - 0.5 || px > MARGIN.left + plotW + 0.5) continue;
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(axisY0 + plotH)}" x2="${fmt(px)}" y2="${fmt(axisY0 + plotH + 5)}" stroke="#444"/>`,
      `<text x="${fmt(px)}" y="${fmt(axisY0 + plotH + 18)}" text-anchor="middle" font-size="11">${fmt(t)}</text>`,
    );
  }
  for (const t of niceTicks(ey.lo, ey.hi, 5)) {
    const py = sy(t);
    if (py < axisY0 - 0.5 || py > axisY0 + plotH + 0.5) continue;
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(py)}" x2="${MARGIN.left}" y2="${fmt(py)}" stroke="#444"/>`,
      `<text x="${MARGIN.left - 8}" y="${fmt(py + 4)}" text-anchor="end" font-size="11">${fmt(t)}</text>`,
    );
  }
  if (spec.hline !== undefined) {
    const py = sy(spec.hline);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(py)}" x2="${MARGIN.left + plotW}" y2="${fmt(py)}" stroke="#888" stroke-dasharray="6,4"/>`,
    );
  }
  spec.series.forEach((s, k) => {
    const color = COLORS[k % COLORS.length];
    const points: string[] = [];
    let kept = 0;
    for (let i = 0; i < s.x.length; i++) {
      if (!Number.isFinite(s.x[i]) || !Number.isFinite(s.y[i])) continue;
      points.push(`${fmt(sx(s.x[i]))},${fmt(sy(s.y[i]))}`);
      kept += 1;
    }
    if (kept > 1) {
      parts.push(
        `<polyline points="${points.join(" ")}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
      );
    }
    if (kept <= 40) {
      for (const p of points) {
        const [px, py] = p.split(",");
        parts.push(`<circle cx="${px}" cy="${py}" r="2.4" fill="${color}"/>`);
      }
    }
  });
  if (showLegend) {
    spec.series.forEach((s, k) => {
      const lx = MARGIN.left + plotW - 170;
      const ly = axisY0 + 16 + 16 * k;
      parts.push(
        `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${COLORS[k % COLORS.length]}" stroke-width="2"/>`,
        `<text x="${lx + 28}" y="${ly}" font-size="11">${escapeXml(s.label)}</text>`,
      );
    });
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${fmt(axisY0 + plotH + 36)}" text-anchor="middle" font-size="12">${escapeXml(spec.xLabel)}</text>`,
    `<text x="18" y="${fmt(axisY0 + plotH / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 18 ${fmt(axisY0 + plotH / 2)})">${escapeXml(spec.yLabel)}</text>`,
  );
  return parts.join("\n");
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderFigure(panels: PanelSpec[], title?: string): string {
  const height = PANEL_HEIGHT * panels.length + (title ? 20 : 0);
  const body: string[] = [];
  body.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${height}" viewBox="0 0 ${WIDTH} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    `<rect width="${WIDTH}" height="${height}" fill="white"/>`,
  );
  if (title) {
    body.push(
      `<text x="${WIDTH / 2}" y="20" text-anchor="middle" font-size="14">${escapeXml(title)}</text>`,
    );
  }
  panels.forEach((panel, i) => {
    body.push(renderPanel(panel, (title ? 20 : 0) + i * PANEL_HEIGHT, i === 0));
  });
  body.push("</svg>");
  return body.join("\n");
}
