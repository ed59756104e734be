import init, { operator_curves, rmse_envelope, threshold_demo } from "./pkg/softval_wasm.js";

const $ = (id) => document.getElementById(id);
const MARGIN = 40;

// Axes for [0, xmax] x [0, ymax]; returns a data-to-pixel mapping.
function axes(ctx, xmax, ymax, xlabel, ylabel) {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const sx = (x) => MARGIN + (x / xmax) * (width - 2 * MARGIN);
  const sy = (y) => height - MARGIN - (y / ymax) * (height - 2 * MARGIN);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.lineWidth = 1;
  ctx.font = "12px sans-serif";
  ctx.strokeRect(sx(0), sy(ymax), sx(xmax) - sx(0), sy(0) - sy(ymax));
  for (let i = 0; i <= 4; i++) {
    const x = (xmax * i) / 4;
    const y = (ymax * i) / 4;
    ctx.fillText(x.toFixed(2), sx(x) - 10, height - MARGIN + 16);
    ctx.fillText(y.toFixed(2), 4, sy(y) + 4);
  }
  ctx.fillText(xlabel, width / 2 - 20, height - 6);
  ctx.save();
  ctx.translate(12, height / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  return { sx, sy };
}

function line(ctx, map, xs, ys, color, dashed = false) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.setLineDash(dashed ? [5, 4] : []);
  ctx.beginPath();
  xs.forEach((x, i) => {
    const [px, py] = [map.sx(x), map.sy(ys[i])];
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function column(flat, width, index) {
  const out = [];
  for (let i = index; i < flat.length; i += width) out.push(flat[i]);
  return out;
}

function drawOperators() {
  const r = Number($("op-r").value);
  const p = Number($("op-p").value);
  $("op-r-value").textContent = r.toFixed(2);
  $("op-p-value").textContent = p.toFixed(2);
  // the p slider moves in steps of 0.01, so row 100 p of this table is exact
  const table = operator_curves(r, 100);
  const ctx = $("op-canvas").getContext("2d");
  const map = axes(ctx, 1, 1, "prediction p", "overlap");
  const ps = column(table, 4, 0);
  ["#c0392b", "#2c7fb8", "#27ae60"].forEach((color, k) => line(ctx, map, ps, column(table, 4, k + 1), color));
  ctx.strokeStyle = "#555";
  ctx.setLineDash([3, 3]);
  ctx.beginPath();
  ctx.moveTo(map.sx(p), map.sy(0));
  ctx.lineTo(map.sx(p), map.sy(1));
  ctx.stroke();
  ctx.setLineDash([]);
  const row = 4 * Math.round(p * 100);
  $("op-readout").textContent =
    `strong ${table[row + 1].toFixed(3)}  product ${table[row + 2].toFixed(3)}  weak ${table[row + 3].toFixed(3)}`;
}

function drawEnvelope() {
  const reference = $("env-ref")
    .value.split(",")
    .map((s) => Number(s.trim()))
    .filter(isMembership);
  const ctx = $("env-canvas").getContext("2d");
  if (reference.length === 0 || reference.every((v) => v === 0)) {
    axes(ctx, 1, 1, "wMAE", "wRMSE");
    return;
  }
  const table = rmse_envelope(Float64Array.from(reference), 100);
  const mae = column(table, 3, 0);
  const map = axes(ctx, 1, 1, "wMAE", "wRMSE");
  line(ctx, map, mae, column(table, 3, 1), "#2c7fb8");
  line(ctx, map, mae, column(table, 3, 2), "#c0392b");
  const grid = Array.from({ length: 101 }, (_, i) => i / 100);
  line(ctx, map, grid, grid, "#999", true);
  line(ctx, map, grid, grid.map(Math.sqrt), "#999", true);
}

function isMembership(v) {
  return Number.isFinite(v) && v >= 0 && v <= 1;
}

function marker(ctx, map, point, shape) {
  if (point.spec === null || point.sens === null) return;
  const [x, y] = [map.sx(point.spec), map.sy(point.sens)];
  ctx.strokeStyle = "#000";
  ctx.lineWidth = 2;
  ctx.beginPath();
  if (shape === "plus") {
    ctx.moveTo(x - 7, y); ctx.lineTo(x + 7, y); ctx.moveTo(x, y - 7); ctx.lineTo(x, y + 7);
  } else if (shape === "cross") {
    ctx.moveTo(x - 6, y - 6); ctx.lineTo(x + 6, y + 6); ctx.moveTo(x - 6, y + 6); ctx.lineTo(x + 6, y - 6);
  } else {
    ctx.arc(x, y, 6, 0, 2 * Math.PI);
  }
  ctx.stroke();
}

function drawCurve() {
  const seed = Math.max(0, Math.floor(Number($("roc-seed").value) || 0));
  const n = Math.min(5000, Math.max(10, Math.floor(Number($("roc-n").value) || 300)));
  const noise = Number($("roc-noise").value);
  $("roc-noise-value").textContent = noise.toFixed(2);
  const demo = JSON.parse(threshold_demo(seed, n, noise));
  const ctx = $("roc-canvas").getContext("2d");
  const map = axes(ctx, 1, 1, "specificity", "sensitivity");
  const points = demo.curve.filter((p) => p.spec !== null && p.sens !== null);
  line(ctx, map, points.map((p) => p.spec), points.map((p) => p.sens), "#2c7fb8");
  marker(ctx, map, demo.soft, "plus");
  marker(ctx, map, demo.wta, "circle");
  marker(ctx, map, demo.third, "cross");
  const fmt = (p) => `spec ${p.spec?.toFixed(3)} sens ${p.sens?.toFixed(3)}`;
  $("roc-readout").textContent = `soft: ${fmt(demo.soft)} | wta: ${fmt(demo.wta)} | 1/3: ${fmt(demo.third)}`;
}

function guarded(draw) {
  return () => {
    try {
      $("error").textContent = "";
      draw();
    } catch (e) {
      $("error").textContent = String(e);
    }
  };
}

await init();
const ops = guarded(drawOperators);
const env = guarded(drawEnvelope);
const roc = guarded(drawCurve);
["op-r", "op-p"].forEach((id) => $(id).addEventListener("input", ops));
$("env-ref").addEventListener("change", env);
["roc-seed", "roc-n", "roc-noise"].forEach((id) => $(id).addEventListener("input", roc));
ops();
env();
roc();
