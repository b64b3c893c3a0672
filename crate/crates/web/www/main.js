import init, { solve, sampleSimplex, perturb, version } from "./pkg/bezier_mopt_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(out, e) {
  out.className = "out err";
  out.textContent = String(e);
}

// ---- 3-D view -------------------------------------------------------------

let scene = null;
let yaw = 0.8;
let pitch = 0.5;

function project(p, w, h, scale) {
  const [x, y, z] = [p[0] - 0.5, p[1] - 0.5, p[2] - 0.5];
  const cy = Math.cos(yaw), sy = Math.sin(yaw);
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  const x1 = cy * x - sy * y;
  const y1 = sy * x + cy * y;
  const y2 = cp * z - sp * y1;
  return [w / 2 + scale * x1, h / 2 - scale * y2];
}

function drawScene() {
  const c = $("view");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!scene) return;
  const scale = c.width * 0.45;
  const P = (p) => project(p, c.width, c.height, scale);

  g.strokeStyle = "#ddd";
  for (const axis of [[1, 0, 0], [0, 1, 0], [0, 0, 1]]) {
    const [a, b] = [P([0, 0, 0]), P(axis)];
    g.beginPath(); g.moveTo(a[0], a[1]); g.lineTo(b[0], b[1]); g.stroke();
  }

  if (scene.exact) {
    g.fillStyle = "#999";
    for (const p of scene.exact) {
      const q = P(p);
      g.fillRect(q[0] - 1.5, q[1] - 1.5, 3, 3);
    }
  }

  g.strokeStyle = "#2a6fdb";
  g.lineWidth = 0.8;
  for (const [a, b, d] of scene.triangles) {
    const [pa, pb, pd] = [P(scene.surface[a]), P(scene.surface[b]), P(scene.surface[d])];
    g.beginPath(); g.moveTo(pa[0], pa[1]); g.lineTo(pb[0], pb[1]); g.lineTo(pd[0], pd[1]); g.closePath(); g.stroke();
  }

  g.fillStyle = "#d33";
  for (const p of scene.control_points) {
    const q = P(p);
    g.beginPath(); g.arc(q[0], q[1], 3, 0, 2 * Math.PI); g.fill();
  }
  g.fillStyle = "#222";
  g.fillText("blue: fitted surface   red: control points" + (scene.exact ? "   grey: exact Pareto set" : ""), 8, c.height - 8);
}

function drawTrace(trace) {
  const c = $("trace");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  const pts = trace.filter((r) => r[1] > 0);
  if (pts.length === 0) return;
  const ys = pts.map((r) => Math.log10(r[1]));
  const lo = Math.floor(Math.min(...ys)), hi = Math.ceil(Math.max(...ys));
  const kmax = trace[trace.length - 1][0];
  const m = 40;
  const X = (k) => m + (c.width - 2 * m) * Math.log10(k) / Math.max(Math.log10(kmax), 1e-9);
  const Y = (v) => c.height - m - (c.height - 2 * m) * (v - lo) / Math.max(hi - lo, 1);
  g.strokeStyle = "#ccc";
  g.fillStyle = "#555";
  for (let e = lo; e <= hi; e++) {
    g.beginPath(); g.moveTo(m, Y(e)); g.lineTo(c.width - m, Y(e)); g.stroke();
    g.fillText("1e" + e, 4, Y(e) + 4);
  }
  g.strokeStyle = "#2a6fdb";
  g.beginPath();
  pts.forEach((r, i) => (i ? g.lineTo(X(r[0]), Y(Math.log10(r[1]))) : g.moveTo(X(r[0]), Y(Math.log10(r[1])))));
  g.stroke();
  g.fillStyle = "#222";
  g.fillText("control point change ||P(k+1) - P(k)||_F vs iteration k (log-log)", m, 16);
}

function runSolve() {
  const out = $("solve-out");
  out.className = "out";
  try {
    const t0 = performance.now();
    scene = JSON.parse(solve($("problem").value, num("n"), num("k"), num("degree"), BigInt(num("seed"))));
    const ms = (performance.now() - t0).toFixed(0);
    drawScene();
    drawTrace(scene.trace);
    out.textContent = `${scene.problem}: ${scene.trace.length} iterations in ${ms} ms` +
      (scene.mse !== null ? `, MSE vs exact Pareto set ${scene.mse.toExponential(3)}` : ", no closed-form Pareto set");
  } catch (e) {
    fail(out, e);
  }
}

let drag = null;
$("view").addEventListener("mousedown", (e) => (drag = [e.clientX, e.clientY]));
window.addEventListener("mouseup", () => (drag = null));
window.addEventListener("mousemove", (e) => {
  if (!drag) return;
  yaw += (e.clientX - drag[0]) * 0.01;
  pitch = Math.max(-1.5, Math.min(1.5, pitch + (e.clientY - drag[1]) * 0.01));
  drag = [e.clientX, e.clientY];
  drawScene();
});

// ---- simplex sampling -----------------------------------------------------

let sampled = null;

function drawSimplex() {
  const c = $("simplex");
  const g = c.getContext("2d");
  g.clearRect(0, 0, c.width, c.height);
  if (!sampled) return;
  const corners = [[c.width / 2, 20], [20, c.height - 30], [c.width - 20, c.height - 30]];
  const at = (t) => [0, 1].map((d) => t[0] * corners[0][d] + t[1] * corners[1][d] + t[2] * corners[2][d]);
  g.strokeStyle = "#888";
  g.beginPath(); corners.forEach((p, i) => (i ? g.lineTo(...p) : g.moveTo(...p))); g.closePath(); g.stroke();
  const b = Math.min(num("sb"), sampled.indices.length - 1);
  const top = Math.max(...sampled.basis.map((z) => z[b]), 1e-12);
  sampled.weights.forEach((t, i) => {
    const v = sampled.basis[i][b] / top;
    g.fillStyle = `rgb(${Math.round(40 + 200 * v)}, 60, ${Math.round(220 - 180 * v)})`;
    const [x, y] = at(t);
    g.fillRect(x - 2, y - 2, 4, 4);
  });
  g.fillStyle = "#222";
  g.fillText("t1", corners[0][0] + 6, corners[0][1] + 4);
  g.fillText("t2", corners[1][0], corners[1][1] + 16);
  g.fillText("t3", corners[2][0] - 10, corners[2][1] + 16);
  g.fillText(`colour: z_d(t) for d = (${sampled.indices[b].join(", ")})`, 8, c.height - 6);
}

function runSample() {
  const out = $("sample-out");
  out.className = "out";
  try {
    sampled = JSON.parse(sampleSimplex(num("sn"), num("sd"), BigInt(num("ss"))));
    $("sb").max = String(sampled.indices.length - 1);
    drawSimplex();
    out.textContent = `${sampled.weights.length} weights, ${sampled.indices.length} basis functions; ` +
      `max |sum z - 1| = ${sampled.max_partition_error.toExponential(2)}, max ||z|| = ${sampled.max_basis_norm.toFixed(4)}`;
  } catch (e) {
    fail(out, e);
  }
}

$("sb").addEventListener("input", drawSimplex);

// ---- perturbation ---------------------------------------------------------

function runPerturb() {
  const out = $("perturb-out");
  out.className = "out";
  try {
    const res = JSON.parse(perturb(new Uint32Array([30, 50, 100]), num("pk"), num("pkk"), num("pr"), 0n));
    const c = $("gaps");
    const g = c.getContext("2d");
    g.clearRect(0, 0, c.width, c.height);
    const all = res.rows.flatMap((r) => r.sup_gaps).filter((v) => v > 0);
    const lo = Math.floor(Math.log10(Math.min(...all))), hi = Math.ceil(Math.log10(Math.max(...all)));
    const m = 50;
    const Y = (v) => c.height - m - (c.height - 2 * m) * (Math.log10(Math.max(v, 10 ** lo)) - lo) / Math.max(hi - lo, 1);
    g.strokeStyle = "#ddd";
    g.fillStyle = "#555";
    for (let e = lo; e <= hi; e++) {
      g.beginPath(); g.moveTo(m, Y(10 ** e)); g.lineTo(c.width - 10, Y(10 ** e)); g.stroke();
      g.fillText("1e" + e, 6, Y(10 ** e) + 4);
    }
    const step = (c.width - m - 10) / res.rows.length;
    res.rows.forEach((r, i) => {
      const x = m + step * (i + 0.5);
      g.fillStyle = "#2a6fdb";
      for (const v of r.sup_gaps) g.fillRect(x - 12 + Math.random() * 24, Y(v) - 2, 4, 4);
      g.strokeStyle = "#d33";
      g.beginPath(); g.moveTo(x - 30, Y(r.median_sup_gap)); g.lineTo(x + 30, Y(r.median_sup_gap)); g.stroke();
      g.fillStyle = "#222";
      g.fillText("N = " + r.N, x - 18, c.height - m + 18);
    });
    g.fillText("sup-gap of the loss over a fixed weight grid (red: median)", m, 16);
    out.textContent = res.rows.map((r) => `N=${r.N}: median sup-gap ${r.median_sup_gap.toExponential(3)}`).join("\n");
  } catch (e) {
    fail(out, e);
  }
}

$("run").addEventListener("click", runSolve);
$("sample").addEventListener("click", runSample);
$("perturb").addEventListener("click", runPerturb);

init().then(() => {
  $("status").textContent = version() + " loaded.";
  runSolve();
  runSample();
});
