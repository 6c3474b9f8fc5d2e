import init, { coneView, spreadSweep, fitPlaced } from "./pkg/edcone_web.js";

const COLORS = ["#2b83ba", "#5eb342", "#fdae61", "#d7191c", "#7b3294", "#008837", "#e66101", "#404040"];
const SWEEP_SCALES = [0.25, 0.5, 1, 2, 3, 4, 6, 8];
const $ = (id) => document.getElementById(id);
const fmt = (x) => x.toFixed(4);

function showError(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function scoreTable(table, scores) {
  table.innerHTML = "<thead><tr><th>pair</th><th>score</th></tr></thead>";
  const body = table.createTBody();
  for (const s of scores) {
    const row = body.insertRow();
    row.insertCell().textContent = s.pair;
    row.insertCell().textContent = s.degenerate ? "0 (degenerate)" : fmt(s.score);
  }
}

function drawScatter(view) {
  const canvas = $("scatter");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const xs = view.points.map((p) => p.along);
  const ys = view.points.map((p) => p.across);
  const pad = 20;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (canvas.width - 2 * pad);
  const sy = (y) => canvas.height - pad - ((y - y0) / (y1 - y0 || 1)) * (canvas.height - 2 * pad);

  ctx.strokeStyle = "#bbb";
  ctx.beginPath();
  ctx.moveTo(pad, canvas.height - 8);
  ctx.lineTo(canvas.width - pad, canvas.height - 8);
  ctx.stroke();
  ctx.fillStyle = "#666";
  ctx.fillText("easier  ←  along w  →  harder", canvas.width / 2 - 70, canvas.height - 12);

  for (const p of view.points) {
    ctx.fillStyle = COLORS[p.level % COLORS.length];
    ctx.globalAlpha = 0.75;
    ctx.beginPath();
    ctx.arc(sx(p.along), sy(p.across), 3, 0, 2 * Math.PI);
    ctx.fill();
  }
  ctx.globalAlpha = 1;

  $("legend").innerHTML = view.levels
    .map((name, i) => `<span><i class="swatch" style="background:${COLORS[i % COLORS.length]}"></i>${name}</span>`)
    .join("");
}

function params() {
  return {
    seed: Math.max(0, parseInt($("seed").value, 10) || 0),
    dim: Math.min(256, Math.max(2, parseInt($("dim").value, 10) || 16)),
    scale: parseFloat($("scale").value),
  };
}

function updateCone() {
  const { seed, dim, scale } = params();
  $("scale-out").textContent = scale.toFixed(1);
  try {
    const view = JSON.parse(coneView(seed, dim, 4, 50, scale));
    drawScatter(view);
    $("recovery").textContent = fmt(view.recovery);
    $("margin").textContent = fmt(view.mean_margin);
    scoreTable($("scores"), view.scores);
    showError(null);
  } catch (e) {
    showError(e);
  }
}

function updateSweep() {
  const { seed, dim } = params();
  try {
    const rows = JSON.parse(spreadSweep(seed, dim, 4, 50, new Float64Array(SWEEP_SCALES)));
    const table = $("sweep");
    const pairs = rows[0].scores.map((s) => s.pair);
    table.innerHTML = `<thead><tr><th>spread scale</th><th>recovery</th>${pairs.map((p) => `<th>${p}</th>`).join("")}</tr></thead>`;
    const body = table.createTBody();
    for (const r of rows) {
      const row = body.insertRow();
      row.insertCell().textContent = r.spread_scale;
      row.insertCell().textContent = fmt(r.recovery);
      for (const s of r.scores) row.insertCell().textContent = fmt(s.score);
    }
  } catch (e) {
    showError(e);
  }
}

const placed = [];

function drawPlane(fit) {
  const canvas = $("plane");
  const ctx = canvas.getContext("2d");
  const c = canvas.width / 2;
  const r = c * 0.75;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.arc(c, c, r, 0, 2 * Math.PI);
  ctx.stroke();

  const units = fit ? fit.unit : placed.map((p) => {
    const n = Math.hypot(p.x, p.y) || 1;
    return [p.x / n, p.y / n];
  });
  units.forEach(([x, y], i) => {
    ctx.fillStyle = COLORS[placed[i].level];
    ctx.beginPath();
    ctx.arc(c + x * r, c - y * r, 5, 0, 2 * Math.PI);
    ctx.fill();
  });

  if (fit) {
    const [wx, wy] = fit.w;
    const tip = [c + wx * r * 1.2, c - wy * r * 1.2];
    ctx.strokeStyle = "#222";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(c - wx * r * 1.2, c + wy * r * 1.2);
    ctx.lineTo(...tip);
    ctx.stroke();
    const a = Math.atan2(-wy, wx);
    ctx.beginPath();
    ctx.moveTo(...tip);
    ctx.lineTo(tip[0] - 10 * Math.cos(a - 0.4), tip[1] - 10 * Math.sin(a - 0.4));
    ctx.lineTo(tip[0] - 10 * Math.cos(a + 0.4), tip[1] - 10 * Math.sin(a + 0.4));
    ctx.closePath();
    ctx.fillStyle = "#222";
    ctx.fill();
    ctx.lineWidth = 1;
  }
}

function updatePlaced() {
  const out = $("placed-result");
  const levels = new Set(placed.map((p) => p.level));
  if (levels.size < 2) {
    out.textContent = "Add items from at least two levels.";
    drawPlane(null);
    return;
  }
  try {
    const fit = JSON.parse(fitPlaced(JSON.stringify(placed)));
    drawPlane(fit);
    out.innerHTML = `<p>w = (${fmt(fit.w[0])}, ${fmt(fit.w[1])})<br>
      mean margin ${fmt(fit.mean_margin)} over ${fit.pairs} pairs, ${fit.violated} violated</p><table id="placed-scores"></table>`;
    scoreTable($("placed-scores"), fit.scores);
    showError(null);
  } catch (e) {
    out.textContent = String(e.message ?? e);
    drawPlane(null);
  }
}

$("plane").addEventListener("click", (ev) => {
  const canvas = ev.currentTarget;
  const rect = canvas.getBoundingClientRect();
  const c = canvas.width / 2;
  const x = (ev.clientX - rect.left) * (canvas.width / rect.width) - c;
  const y = c - (ev.clientY - rect.top) * (canvas.height / rect.height);
  if (Math.hypot(x, y) < 1) return;
  placed.push({ x, y, level: parseInt($("level").value, 10) });
  updatePlaced();
});

$("clear").addEventListener("click", () => {
  placed.length = 0;
  updatePlaced();
});

$("scale").addEventListener("input", updateCone);
for (const id of ["dim", "seed"]) {
  $(id).addEventListener("change", () => {
    updateCone();
    updateSweep();
  });
}

await init();
updateCone();
updateSweep();
updatePlaced();
