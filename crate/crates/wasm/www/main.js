// Built with: wasm-pack build crates/wasm --target web --out-dir www/pkg
import init, { pendulum_design, gamma_curve, event_simulation } from "./pkg/resample_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function plot(canvas, series, marks = []) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x), ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(0, ...ys), Math.max(...ys)];
  const px = (x) => 40 + ((x - x0) / (x1 - x0 || 1)) * (w - 50);
  const py = (y) => h - 20 - ((y - y0) / (y1 - y0 || 1)) * (h - 30);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(40, 10, w - 50, h - 30);
  ctx.fillStyle = "#333";
  ctx.fillText(y1.toPrecision(3), 2, 14);
  ctx.fillText(y0.toPrecision(3), 2, h - 20);
  ctx.fillText(x0.toPrecision(3), 40, h - 5);
  ctx.fillText(x1.toPrecision(3), w - 40, h - 5);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
  }
  ctx.strokeStyle = "rgba(200,0,0,0.4)";
  for (const t of marks) {
    ctx.beginPath();
    ctx.moveTo(px(t), h - 20);
    ctx.lineTo(px(t), h - 28);
    ctx.stroke();
  }
}

function guard(out, f) {
  try {
    f();
  } catch (e) {
    out.textContent = `error: ${e}`;
  }
}

await init();

$("design").onclick = () =>
  guard($("design-out"), () => {
    const r = JSON.parse(pendulum_design(num("gamma")));
    const fmt = (zs) => zs.map(([re, im]) => (im ? `${re.toFixed(4)}±${Math.abs(im).toFixed(4)}j` : re.toFixed(4))).join(", ");
    $("design-out").textContent =
      `γ_opt = ${r.gamma_opt.toFixed(4)}\nh_sup = ${r.h_sup === null ? "∞" : r.h_sup.toFixed(4)}\n` +
      `K0 zeros: ${fmt(r.zeros)}\nK0 poles: ${fmt(r.poles)}\ngain: ${r.gain.toFixed(4)}`;
  });

$("curve").onclick = () =>
  guard($("design-out"), () => {
    const rows = JSON.parse(gamma_curve(num("gmin"), num("gmax"), parseInt($("points").value, 10)));
    const ok = rows.filter((r) => r.h_sup !== undefined && r.h_sup !== null);
    plot($("curve-plot"), [{ x: ok.map((r) => r.gamma), y: ok.map((r) => r.h_sup), color: "#1565c0" }]);
  });

$("simulate").onclick = () =>
  guard($("sim-out"), () => {
    const r = JSON.parse(event_simulation(num("gamma"), num("eps"), num("hmax"), num("tend")));
    $("sim-out").textContent = `samples = ${r.samples}, h_av = ${r.h_av?.toFixed(4)}, peak |z| = ${r.peak_abs_z.toFixed(4)}`;
    plot(
      $("sim-plot"),
      [
        { x: r.t, y: r.y, color: "#1565c0" },
        { x: r.t, y: r.u, color: "#2e7d32" },
      ],
      r.instants,
    );
  });

$("design").click();
