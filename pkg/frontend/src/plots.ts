/**
 * Small dependency-free SVG plots. Inputs are raw series already supplied
 * by the API; everything here is presentation (scaling, binning for the
 * density outline), never new statistics.
 */

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 420;
const H = 220;
const PAD = 34;

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  return node;
}

function frame(): SVGElement {
  const root = svgEl("svg", {
    viewBox: `0 0 ${W} ${H}`,
    class: "plot",
    role: "img",
  });
  root.append(
    svgEl("rect", {
      x: String(PAD),
      y: "10",
      width: String(W - PAD - 10),
      height: String(H - PAD - 10),
      class: "plot-bg",
    }),
  );
  return root;
}

function scale(values: number[], lo: number, hi: number): (v: number) => number {
  const min = Math.min(...values);
  const max = Math.max(...values);
  const span = max - min || 1;
  return (v) => lo + ((v - min) / span) * (hi - lo);
}

/** Histogram outline of predictions with dashed target-band markers. */
export function densityPlot(values: number[], bandLo: number, bandHi: number, bins = 30): SVGElement {
  const root = frame();
  if (values.length === 0) return root;
  const min = Math.min(...values, bandLo);
  const max = Math.max(...values, bandHi);
  const span = max - min || 1;
  const counts = new Array<number>(bins).fill(0);
  for (const v of values) {
    const bin = Math.min(bins - 1, Math.floor(((v - min) / span) * bins));
    counts[bin] += 1;
  }
  const peak = Math.max(...counts) || 1;
  const x = (v: number) => PAD + ((v - min) / span) * (W - PAD - 10);
  const y = (c: number) => H - PAD - (c / peak) * (H - PAD - 20);
  const points = counts
    .map((c, i) => `${x(min + ((i + 0.5) / bins) * span).toFixed(1)},${y(c).toFixed(1)}`)
    .join(" ");
  root.append(svgEl("polyline", { points, class: "density-line" }));
  for (const edge of [bandLo, bandHi]) {
    root.append(
      svgEl("line", {
        x1: x(edge).toFixed(1),
        x2: x(edge).toFixed(1),
        y1: "10",
        y2: String(H - PAD),
        class: "band-line",
        "stroke-dasharray": "6 4",
      }),
    );
  }
  return root;
}

export function scatterPlot(xs: number[], ys: number[], diagonal = false): SVGElement {
  const root = frame();
  if (xs.length === 0) return root;
  const sx = scale(xs, PAD, W - 10);
  const sy = scale(ys, H - PAD, 10);
  if (diagonal) {
    const lo = Math.max(Math.min(...xs), Math.min(...ys));
    const hi = Math.min(Math.max(...xs), Math.max(...ys));
    root.append(
      svgEl("line", {
        x1: sx(lo).toFixed(1),
        y1: sy(lo).toFixed(1),
        x2: sx(hi).toFixed(1),
        y2: sy(hi).toFixed(1),
        class: "ref-line",
      }),
    );
  }
  for (let i = 0; i < xs.length; i++) {
    root.append(
      svgEl("circle", {
        cx: sx(xs[i]).toFixed(1),
        cy: sy(ys[i]).toFixed(1),
        r: "2.2",
        class: "dot",
      }),
    );
  }
  return root;
}

export function barChart(labels: string[], values: number[]): SVGElement {
  const root = frame();
  if (values.length === 0) return root;
  const peak = Math.max(...values, 0) || 1;
  const slot = (H - PAD - 16) / labels.length;
  labels.forEach((label, i) => {
    const width = Math.max(0, (values[i] / peak) * (W - PAD - 130));
    const yTop = 12 + i * slot;
    root.append(
      svgEl("rect", {
        x: String(PAD + 112),
        y: yTop.toFixed(1),
        width: width.toFixed(1),
        height: Math.max(4, slot - 6).toFixed(1),
        class: "bar",
      }),
    );
    const text = svgEl("text", {
      x: String(PAD + 106),
      y: (yTop + slot / 2).toFixed(1),
      class: "bar-label",
      "text-anchor": "end",
    });
    text.textContent = label;
    root.append(text);
  });
  return root;
}

export function heatmap(matrix: number[][], gridA: number[], gridB: number[]): SVGElement {
  const root = frame();
  const rows = matrix.length;
  const cols = rows > 0 ? matrix[0].length : 0;
  if (rows === 0 || cols === 0) return root;
  const flat = matrix.flat();
  const min = Math.min(...flat);
  const span = Math.max(...flat) - min || 1;
  const cellW = (W - PAD - 10) / cols;
  const cellH = (H - PAD - 10) / rows;
  for (let i = 0; i < rows; i++) {
    for (let j = 0; j < cols; j++) {
      const heat = (matrix[i][j] - min) / span;
      root.append(
        svgEl("rect", {
          x: (PAD + j * cellW).toFixed(1),
          y: (10 + (rows - 1 - i) * cellH).toFixed(1),
          width: Math.ceil(cellW).toFixed(1),
          height: Math.ceil(cellH).toFixed(1),
          fill: `hsl(${(1 - heat) * 220}, 70%, ${30 + heat * 40}%)`,
          "data-value": String(matrix[i][j]),
        }),
      );
    }
  }
  const title = svgEl("title");
  title.textContent = `${gridA.length}x${gridB.length} response surface`;
  root.append(title);
  return root;
}
