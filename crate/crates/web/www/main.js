import init, { simulate_preset, phase_portrait, beta_curve } from "./pkg/bftl_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
const num = (id) => parseFloat(document.getElementById(id).value);

function frame(canvas, xs, ys) {
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, canvas.width - 2 * pad, canvas.height - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(4), 2, pad + 4);
  ctx.fillText(y0.toPrecision(4), 2, canvas.height - pad);
  ctx.fillText(x0.toPrecision(4), pad, canvas.height - pad + 14);
  ctx.fillText(x1.toPrecision(4), canvas.width - pad - 30, canvas.height - pad + 14);
  return { ctx, sx, sy };
}

function line(ctx, sx, sy, xs, ys, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, k) => (k ? ctx.lineTo(sx(x), sy(ys[k])) : ctx.moveTo(sx(x), sy(ys[k]))));
  ctx.stroke();
  ctx.setLineDash([]);
}

function guarded(infoId, f) {
  const info = document.getElementById(infoId);
  try {
    info.className = "note";
    f(info);
  } catch (e) {
    info.className = "note err";
    info.textContent = String(e);
  }
}

function runPreset() {
  guarded("preset-info", (info) => {
    const id = document.getElementById("preset").value;
    const r = JSON.parse(simulate_preset(id, num("p-alpha"), num("p-beta"), num("p-tend")));
    const canvas = document.getElementById("preset-canvas");
    const all = r.headways.flat().concat(r.h_min, r.h_max ?? []);
    const { ctx, sx, sy } = frame(canvas, r.t, all);
    r.headways.forEach((h, k) => {
      const color = COLORS[k % COLORS.length];
      line(ctx, sx, sy, r.t, h, color);
      line(ctx, sx, sy, [r.t[0], r.t.at(-1)], [r.h_min[k], r.h_min[k]], color, [5, 4]);
    });
    if (r.h_max !== null) line(ctx, sx, sy, [r.t[0], r.t.at(-1)], [r.h_max, r.h_max], "#000", [2, 3]);
    const mins = r.observed_min.map((m, k) => `h${k + 2}: ${m.toFixed(4)} >= ${r.h_min[k].toFixed(4)}`).join(", ");
    const beta = r.beta_satisfied === null ? "" : `, beta assumption ${r.beta_satisfied ? "holds" : "fails"}`;
    info.textContent = `certificate ${r.certificate}; ${mins}${beta}`;
  });
}

const REGION_COLORS = { A: "#1f77b4", B: "#ff7f0e", C: "#2ca02c", D: "#d62728", E: "#9467bd", F: "#8c564b" };

function runPhase() {
  guarded("phase-info", (info) => {
    const vs = num("ph-vstar");
    const r = JSON.parse(phase_portrait(num("ph-alpha"), num("ph-beta"), vs, num("ph-h0"), num("ph-v0"), num("ph-tend")));
    const canvas = document.getElementById("phase-canvas");
    const span = r.ov.concat(r.v, [vs]);
    const { ctx, sx, sy } = frame(canvas, span, span);
    const [lo, hi] = [Math.min(...span), Math.max(...span)];
    line(ctx, sx, sy, [lo, hi], [lo, hi], "#bbb", [4, 4]);
    line(ctx, sx, sy, [vs, vs], [lo, hi], "#bbb", [4, 4]);
    line(ctx, sx, sy, [lo, hi], [vs, vs], "#bbb", [4, 4]);
    for (let k = 1; k < r.ov.length; k++) {
      ctx.strokeStyle = REGION_COLORS[r.regions[k]] ?? "#000";
      ctx.beginPath();
      ctx.moveTo(sx(r.ov[k - 1]), sy(r.v[k - 1]));
      ctx.lineTo(sx(r.ov[k]), sy(r.v[k]));
      ctx.stroke();
    }
    const visited = [...new Set(r.regions)].join(" -> ");
    info.textContent = `h* = ${r.h_star.toFixed(4)}; regions ${visited}; beta assumption ${r.beta_satisfied ? "holds" : "fails"} on the visited headways`;
  });
}

function runBeta() {
  guarded("beta-info", (info) => {
    const r = JSON.parse(beta_curve(num("b-c"), num("b-ds"), num("b-vmax"), num("b-lo"), num("b-hi")));
    const canvas = document.getElementById("beta-canvas");
    const { ctx, sx, sy } = frame(canvas, r.h, r.f.concat([0]));
    line(ctx, sx, sy, r.h, r.f, COLORS[0]);
    line(ctx, sx, sy, [r.argmax, r.argmax], [0, r.max_f], COLORS[1], [4, 4]);
    info.textContent = `max V'(h) h^2 = ${r.max_f.toFixed(4)} at h = ${r.argmax.toFixed(4)}; the assumption needs beta above this`;
  });
}

await init();
document.getElementById("run-preset").addEventListener("click", runPreset);
document.getElementById("run-phase").addEventListener("click", runPhase);
document.getElementById("run-beta").addEventListener("click", runBeta);
runPreset();
runPhase();
runBeta();
