import init, { exploreBound, runFormation, checkTransient } from "./pkg/serial_consensus_web.js";

const $ = (id) => document.getElementById(id);

function parsePoles(text) {
  return text.split(",").map((s) => {
    const [num, den] = s.trim().split("/");
    return den === undefined ? Number(num) : Number(num) / Number(den);
  });
}

// Each series is { xs, ys, color, dash? }; hlines are drawn dashed across the plot.
function plot(canvas, series, { logX = false, logY = false, hlines = [] } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 48;
  ctx.clearRect(0, 0, w, h);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? Math.log10 : (v) => v;
  const xs = series.flatMap((s) => s.xs).map(fx);
  const ys = series.flatMap((s) => s.ys).concat(hlines.map((l) => l.y)).filter(Number.isFinite).map(fy);
  if (xs.length === 0 || ys.length === 0) return;
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y1 === y0) { y0 -= 1; y1 += 1; }
  if (x1 === x0) x1 = x0 + 1;
  const px = (v) => pad + ((fx(v) - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (v) => h - pad + ((fy(v) - y0) / (y1 - y0)) * (2 * pad - h);

  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad / 2, w - 2 * pad, h - 1.5 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  const fmt = (v, log) => (log ? (10 ** v).toPrecision(3) : v.toPrecision(3));
  ctx.fillText(fmt(y1, logY), 2, pad / 2 + 10);
  ctx.fillText(fmt(y0, logY), 2, h - pad);
  ctx.fillText(fmt(x0, logX), pad, h - pad / 2);
  ctx.fillText(fmt(x1, logX), w - pad - 30, h - pad / 2);

  for (const line of hlines) {
    ctx.setLineDash([6, 4]);
    ctx.strokeStyle = line.color;
    ctx.beginPath();
    ctx.moveTo(pad, py(line.y));
    ctx.lineTo(w - pad, py(line.y));
    ctx.stroke();
  }
  for (const s of series) {
    ctx.setLineDash(s.dash ?? []);
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.ys[i])) : ctx.moveTo(px(x), py(s.ys[i]))));
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

function run(outId, fn) {
  const out = $(outId);
  out.classList.remove("err");
  try {
    fn(out);
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e.message ?? e);
  }
}

function boundDemo() {
  run("b-out", (out) => {
    const q = {
      poles: parsePoles($("b-poles").value),
      vary: Number($("b-vary").value),
      from: Number($("b-from").value),
      to: Number($("b-to").value),
      points: 300,
    };
    const r = JSON.parse(exploreBound(JSON.stringify(q)));
    let text = `optimal ${r.optimal.toPrecision(6)}   unscaled ${r.raw.toPrecision(6)}\n`;
    text += `scaling K = [${r.scaling.map((k) => k.toPrecision(4)).join(", ")}]`;
    if (r.alpha_xi !== null) text += `\nalpha_xi ${r.alpha_xi.toPrecision(6)}   alpha_w ${r.alpha_w.toPrecision(6)}`;
    out.textContent = text;
    const xs = r.curve.map((p) => p.pole);
    plot($("b-plot"), [
      { xs, ys: r.curve.map((p) => p.raw), color: "#bbb", dash: [3, 3] },
      { xs, ys: r.curve.map((p) => p.optimal), color: "#1f5fbf" },
    ], { logX: true, logY: true });
  });
}

function formationDemo() {
  run("f-out", (out) => {
    const q = {
      poles: parsePoles($("f-poles").value),
      n_agents: Number($("f-n").value),
      controller: $("f-ctrl").value,
      theta: Number($("f-theta").value),
      v_ref: Number($("f-vref").value),
      points: 600,
    };
    const r = JSON.parse(runFormation(JSON.stringify(q)));
    let text = `${r.controller} with poles [${r.poles.map((p) => p.toPrecision(4)).join(", ")}], T = ${r.horizon.toFixed(1)} s\n`;
    text += `sup ratio ${r.ratio.toPrecision(4)} (bound ${r.bound.toPrecision(4)})   `;
    text += `final |L(x-d)| ${r.epos_final.toExponential(2)}   ${r.rejected ? "load rejected" : "load not rejected"}`;
    if (r.stationary_prediction !== null) text += `\npredicted stationary error ${r.stationary_prediction.toPrecision(5)}`;
    out.textContent = text;
    const n = r.epos.length;
    const series = r.epos.map((ys, i) => ({
      xs: r.times,
      ys,
      color: `hsl(${(220 + (i * 140) / Math.max(n - 1, 1)) % 360}, 65%, 45%)`,
    }));
    plot($("f-plot"), series);
  });
}

function transientDemo() {
  run("t-out", (out) => {
    const q = {
      poles: parsePoles($("t-poles").value),
      n_agents: Number($("t-n").value),
      graph: $("t-graph").value,
      seed: Number($("t-seed").value),
      points: 600,
    };
    const r = JSON.parse(checkTransient(JSON.stringify(q)));
    out.textContent =
      `max ||xi(t)|| / ||xi(0)|| = ${r.max_ratio.toPrecision(5)} at t = ${r.sup_time.toFixed(2)}\n` +
      `bound ${r.bound.toPrecision(5)} (unscaled ${r.raw_bound.toPrecision(5)})   ${r.holds ? "holds" : "VIOLATED"}`;
    plot($("t-plot"), [{ xs: r.times, ys: r.ratio_series, color: "#1f5fbf" }], {
      hlines: [{ y: r.bound, color: "#c33" }],
    });
  });
}

await init();
$("b-run").onclick = boundDemo;
$("f-run").onclick = formationDemo;
$("t-run").onclick = transientDemo;
boundDemo();
