import init, { allocation, sweep, oracle } from "./pkg/signal_wasm.js";

const PRESETS = ["ex1a", "ex1b", "ex2a", "ex2b"];
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const $ = (id) => document.getElementById(id);

function fail(out, e) {
  out.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e);
  out.appendChild(p);
}

function table(headers, rows) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const h of headers) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = t.insertRow();
    for (const v of r) tr.insertCell().textContent = typeof v === "number" && !Number.isInteger(v) ? v.toFixed(4) : v;
  }
  return t;
}

function clear(canvas) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.font = "11px system-ui, sans-serif";
  return ctx;
}

// one cycle as a strip: phase budgets in colour, red gaps in grey
function drawCycle(canvas, a) {
  const ctx = clear(canvas);
  const total = a.phase_budget.reduce((s, g) => s + g, 0) + a.red_gaps.reduce((s, g) => s + g, 0);
  const w = canvas.width - 20;
  let x = 10;
  a.phase_budget.forEach((g, j) => {
    const pw = (g / total) * w;
    ctx.fillStyle = COLORS[j % COLORS.length];
    ctx.fillRect(x, 10, pw, 30);
    ctx.fillStyle = "#fff";
    if (pw > 40) ctx.fillText(`phase ${j + 1}: ${g}`, x + 4, 30);
    x += pw;
    const rw = (a.red_gaps[j] / total) * w;
    ctx.fillStyle = "#999";
    ctx.fillRect(x, 10, rw, 30);
    x += rw;
  });
  ctx.fillStyle = "#333";
  ctx.fillText(`cycle ${total} slots, all-red ${a.all_red}`, 10, 55);
}

function lineChart(canvas, title, series, yMax) {
  const ctx = clear(canvas);
  const pad = { l: 45, r: 10, t: 20, b: 30 };
  const W = canvas.width - pad.l - pad.r;
  const H = canvas.height - pad.t - pad.b;
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  if (xs.length === 0) return;
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs);
  const ys = series.flatMap((s) => s.points.map((p) => p[1]));
  const top = yMax ?? Math.max(1e-9, ...ys) * 1.1;
  const px = (x) => pad.l + (x1 === x0 ? W / 2 : ((x - x0) / (x1 - x0)) * W);
  const py = (y) => pad.t + H - (y / top) * H;

  ctx.strokeStyle = "#aaa";
  ctx.strokeRect(pad.l, pad.t, W, H);
  ctx.fillStyle = "#333";
  ctx.fillText(title, pad.l, 12);
  for (let i = 0; i <= 4; i++) {
    const y = (top * i) / 4;
    ctx.fillText(y.toFixed(2), 5, py(y) + 4);
  }
  for (const x of [...new Set(xs)]) ctx.fillText(String(x), px(x) - 10, canvas.height - 10);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.setLineDash(s.dashed ? [5, 4] : []);
    ctx.beginPath();
    s.points.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
    ctx.stroke();
    for (const [x, y] of s.points) ctx.fillRect(px(x) - 2, py(y) - 2, 4, 4);
  }
  ctx.setLineDash([]);
}

function drawSweep(view) {
  const lanes = [...new Set(view.points.flatMap((p) => p.lanes.map((l) => l.lane)))];
  const series = (key) =>
    ["actuated", "fctl"].flatMap((mode) =>
      lanes.map((lane, i) => ({
        color: COLORS[i % COLORS.length],
        dashed: mode === "fctl",
        points: view.points
          .filter((p) => p.mode === mode)
          .map((p) => [p.c, p.lanes.find((l) => l.lane === lane)[key]]),
      })).filter((s) => s.points.length > 0),
    );
  lineChart($("sweep-p"), "P(empty at end of access) vs c", series("p_empty"), 1);
  lineChart($("sweep-m"), "mean queue / √c vs c", series("mean_queue_norm"));
}

function bars(canvas, probs) {
  const ctx = clear(canvas);
  const n = Math.min(probs.length, 60);
  const w = (canvas.width - 20) / n;
  const top = Math.max(...probs.slice(0, n));
  for (let k = 0; k < n; k++) {
    const h = (probs[k] / top) * (canvas.height - 30);
    ctx.fillStyle = COLORS[0];
    ctx.fillRect(10 + k * w, canvas.height - 20 - h, Math.max(1, w - 2), h);
    if (n <= 30 || k % 5 === 0) {
      ctx.fillStyle = "#333";
      ctx.fillText(String(k), 10 + k * w, canvas.height - 6);
    }
  }
}

function fillPresets() {
  for (const sel of document.querySelectorAll("select[name=preset]")) {
    for (const p of PRESETS) sel.add(new Option(p, p));
  }
}

function onAllocate(ev) {
  ev?.preventDefault();
  const f = $("alloc-form").elements;
  const out = $("alloc-out");
  try {
    const a = JSON.parse(allocation(f.preset.value, Number(f.c.value), f.allRed.value));
    out.innerHTML = "";
    out.appendChild(
      table(
        ["lane", "λ", "green g", "λc/g"],
        a.lane_ids.map((id, i) => [id, a.lambda[i], a.green[i], a.rho_lane[i]]),
      ),
    );
    const p = document.createElement("p");
    p.textContent = `phases ${JSON.stringify(a.phase_lanes)}, budgets ${a.phase_budget.join(", ")}, weighted ratio ${a.rho_weighted.toFixed(4)}`;
    out.appendChild(p);
    drawCycle($("alloc-bar"), a);
  } catch (e) {
    fail(out, e);
    clear($("alloc-bar"));
  }
}

function onSweep(ev) {
  ev.preventDefault();
  const f = $("sweep-form").elements;
  const out = $("sweep-out");
  const cs = Uint32Array.from(f.cs.value.split(",").map((s) => Number(s.trim())).filter((x) => x > 0));
  out.textContent = "running…";
  // let the status paint before the synchronous run
  setTimeout(() => {
    try {
      const t0 = performance.now();
      const v = JSON.parse(sweep(f.preset.value, f.mode.value, f.allRed.value, cs, Number(f.cycles.value), Number(f.seed.value)));
      const ms = performance.now() - t0;
      out.innerHTML = "";
      out.appendChild(
        table(
          ["c", "mode", "lane", "P(empty)", "mean queue", "mean / √c", "λc/g"],
          v.points.flatMap((p) => p.lanes.map((l) => [p.c, p.mode, l.lane, l.p_empty, l.mean_queue, l.mean_queue_norm, l.rho_lane])),
        ),
      );
      const note = document.createElement("p");
      note.className = "note";
      note.textContent = `${ms.toFixed(0)} ms` + (v.infeasible.length ? `; infeasible c skipped: ${v.infeasible.join(", ")}` : "");
      out.appendChild(note);
      drawSweep(v);
    } catch (e) {
      fail(out, e);
    }
  }, 10);
}

function onOracle(ev) {
  ev?.preventDefault();
  const f = $("oracle-form").elements;
  const out = $("oracle-out");
  try {
    const v = JSON.parse(oracle(Number(f.c.value), Number(f.g.value), f.dist.value));
    out.innerHTML = "";
    out.appendChild(table(["P(empty)", "mean", "iterations"], [[v.p_empty, v.mean, v.iterations]]));
    bars($("oracle-bar"), v.distribution);
  } catch (e) {
    fail(out, e);
    clear($("oracle-bar"));
  }
}

await init();
fillPresets();
$("alloc-form").addEventListener("submit", onAllocate);
$("sweep-form").addEventListener("submit", onSweep);
$("oracle-form").addEventListener("submit", onOracle);
onAllocate();
onOracle();
