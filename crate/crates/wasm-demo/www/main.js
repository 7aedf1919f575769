import init, { intersection, covariance, bench } from "./pkg/fwal_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showError(el, e) {
  el.innerHTML = "";
  const p = document.createElement("p");
  p.className = "err";
  p.textContent = String(e && e.message ? e.message : e);
  el.appendChild(p);
}

// ---- intersection -------------------------------------------------------

const polygon = [[-0.2, -0.6], [1.4, 0.1], [0.1, 1.3]];
let target = [1.5, 1.2];
const VIEW = 2.2;

function toPx(canvas, [x, y]) {
  const s = canvas.width / (2 * VIEW);
  return [(x + VIEW) * s, (VIEW - y) * s];
}

function fromPx(canvas, px, py) {
  const s = canvas.width / (2 * VIEW);
  return [px / s - VIEW, VIEW - py / s];
}

function polyline(ctx, canvas, pts, close) {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [u, v] = toPx(canvas, p);
    i === 0 ? ctx.moveTo(u, v) : ctx.lineTo(u, v);
  });
  if (close) ctx.closePath();
}

function drawLogPlot(canvas, series) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const all = series.flatMap((s) => s.values).filter((v) => v > 0);
  if (all.length === 0) return;
  const lo = Math.log10(Math.min(...all));
  const hi = Math.log10(Math.max(...all));
  const span = Math.max(hi - lo, 1e-9);
  const n = Math.max(...series.map((s) => s.values.length));
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.values.forEach((v, i) => {
      const x = (i / Math.max(n - 1, 1)) * (canvas.width - 10) + 5;
      const y = canvas.height - 15 - ((Math.log10(Math.max(v, 1e-300)) - lo) / span) * (canvas.height - 30);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.fillStyle = "#555";
  ctx.fillText(`1e${hi.toFixed(1)}`, 5, 12);
  ctx.fillText(`1e${lo.toFixed(1)}`, 5, canvas.height - 3);
  series.forEach((s, i) => {
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, canvas.width - 90, 14 + 12 * i);
  });
}

function runIntersection() {
  const info = $("i-info");
  const eta0 = num("i-eta");
  const request = {
    target,
    l1_radius: num("i-radius"),
    polygon,
    lambda: num("i-lambda"),
    schedule: { type: $("i-schedule").value, eta0 },
    inner: $("i-inner").value,
    iterations: num("i-iters"),
  };
  let resp;
  try {
    resp = JSON.parse(intersection(JSON.stringify(request)));
  } catch (e) {
    showError(info, e);
    return;
  }
  const canvas = $("i-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const r = request.l1_radius;
  ctx.fillStyle = "rgba(31,119,180,0.12)";
  polyline(ctx, canvas, [[r, 0], [0, r], [-r, 0], [0, -r]], true);
  ctx.fill();
  ctx.fillStyle = "rgba(255,127,14,0.12)";
  polyline(ctx, canvas, polygon, true);
  ctx.fill();
  const colors = ["#1f77b4", "#ff7f0e"];
  resp.paths.forEach((path, k) => {
    ctx.strokeStyle = colors[k];
    polyline(ctx, canvas, path, false);
    ctx.stroke();
    const [u, v] = toPx(canvas, path[path.length - 1]);
    ctx.fillStyle = colors[k];
    ctx.fillRect(u - 3, v - 3, 6, 6);
  });
  const [tu, tv] = toPx(canvas, target);
  ctx.fillStyle = "#d62728";
  ctx.beginPath();
  ctx.arc(tu, tv, 4, 0, 2 * Math.PI);
  ctx.fill();
  drawLogPlot($("i-feas"), [
    { label: "‖Mx‖", values: resp.feasibility, color: "#2ca02c" },
    { label: "FW gap", values: resp.fw_gap, color: "#9467bd" },
  ]);
  const last = resp.paths.map((p) => p[p.length - 1].map((v) => v.toFixed(4)).join(", "));
  info.textContent =
    `copies at (${last[0]}) and (${last[1]}); feasibility ${resp.feasibility.at(-1).toExponential(2)}; ` +
    `objective ${resp.objective.at(-1).toFixed(5)}; drop steps ${resp.drop_steps}` +
    (resp.active_atoms === null ? "" : `; active atoms ${resp.active_atoms}`);
}

// ---- covariance ---------------------------------------------------------

function heatmap(title, values, d, mask) {
  const fig = document.createElement("figure");
  const canvas = document.createElement("canvas");
  const cell = Math.max(2, Math.floor(200 / d));
  canvas.width = canvas.height = cell * d;
  const ctx = canvas.getContext("2d");
  const scale = Math.max(...values.map(Math.abs), 1e-12);
  for (let i = 0; i < d; i++) {
    for (let j = 0; j < d; j++) {
      const v = values[i * d + j] / scale;
      const c = Math.round(255 * (1 - Math.min(Math.abs(v), 1)));
      ctx.fillStyle = v >= 0 ? `rgb(255,${c},${c})` : `rgb(${c},${c},255)`;
      ctx.fillRect(j * cell, i * cell, cell, cell);
      if (mask && mask[i * d + j]) {
        ctx.strokeStyle = "#000";
        ctx.strokeRect(j * cell + 0.5, i * cell + 0.5, cell - 1, cell - 1);
      }
    }
  }
  fig.appendChild(canvas);
  const cap = document.createElement("figcaption");
  cap.textContent = title;
  fig.appendChild(cap);
  return fig;
}

function runCovariance() {
  const info = $("c-info");
  const maps = $("c-maps");
  const lambda = num("c-lambda");
  const request = {
    d: num("c-d"),
    n_blocks: num("c-blocks"),
    seed: num("c-seed"),
    lambda,
    time_budget_s: 30,
    fwal: {
      max_outer_iters: num("c-fw"),
      record_every: 10,
      schedule: { type: "harmonic", eta0: lambda },
    },
    gfb: { max_iters: num("c-gfb") },
  };
  let resp;
  try {
    resp = JSON.parse(covariance(JSON.stringify(request)));
  } catch (e) {
    maps.innerHTML = "";
    showError(info, e);
    return;
  }
  const d = resp.summary.d;
  maps.innerHTML = "";
  maps.appendChild(heatmap("truth (boxed: support)", resp.truth, d, resp.support));
  maps.appendChild(heatmap("empirical", resp.empirical, d));
  for (const [name, est] of resp.estimates) {
    maps.appendChild(heatmap(name === "fwal" ? "FW-AL" : "GFB", est, d, resp.support));
  }
  const rows = resp.summary.methods.map(
    (m) =>
      `<tr><td>${m.method}</td><td>${m.iterations}</td><td>${m.wall_time_s.toFixed(2)}</td>` +
      `<td>${m.final_feasibility.toExponential(2)}</td><td>${m.final_objective.toFixed(4)}</td>` +
      `<td>${m.final_support.f1.toFixed(3)}</td><td>${m.error ? m.error.message : ""}</td></tr>`,
  );
  info.innerHTML =
    `<p>support size ${resp.summary.support_size}, β₁ = ${resp.summary.beta1.toFixed(3)}, ` +
    `β₂ = ${resp.summary.beta2.toFixed(3)}</p>` +
    `<table><tr><th>method</th><th>iterations</th><th>seconds</th><th>feasibility</th>` +
    `<th>objective</th><th>f1</th><th>error</th></tr>${rows.join("")}</table>`;
}

// ---- bench --------------------------------------------------------------

function runBench() {
  const out = $("b-out");
  const dims = $("b-dims").value.split(",").map((s) => Number(s.trim())).filter((v) => v > 0);
  let resp;
  try {
    resp = JSON.parse(bench(JSON.stringify({ dims, trials: num("b-trials") })));
  } catch (e) {
    showError(out, e);
    return;
  }
  const rows = resp.rows.map(
    (r) => `<tr><td>${r.dim}</td><td>${r.lmo_ms.toFixed(3)}</td><td>${r.proj_ms.toFixed(3)}</td></tr>`,
  );
  const slope = (v) => (v === null || Number.isNaN(v) ? "n/a" : v.toFixed(2));
  out.innerHTML =
    `<table><tr><th>dim</th><th>oracle ms</th><th>projection ms</th></tr>${rows.join("")}</table>` +
    `<p>log-log slopes: oracle ${slope(resp.lmo_slope)}, projection ${slope(resp.proj_slope)}</p>`;
}

await init();
$("i-canvas").addEventListener("click", (ev) => {
  const rect = ev.target.getBoundingClientRect();
  target = fromPx($("i-canvas"), ev.clientX - rect.left, ev.clientY - rect.top);
  runIntersection();
});
for (const id of ["i-radius", "i-lambda", "i-eta", "i-schedule", "i-inner", "i-iters"]) {
  $(id).addEventListener("change", runIntersection);
}
$("c-run").addEventListener("click", runCovariance);
$("b-run").addEventListener("click", runBench);
runIntersection();
