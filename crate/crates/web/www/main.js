import init, { Demo, kernel_bound_terms, kernel_bound_image, kernel_bound_maxima, smallness_ridge } from "./pkg/muskat_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (v) => (Number.isFinite(v) ? v.toExponential(4) : String(v));

function draw(canvas, pixels, n) {
  canvas.width = n;
  canvas.height = n;
  const ctx = canvas.getContext("2d");
  ctx.putImageData(new ImageData(new Uint8ClampedArray(pixels), n, n), 0, 0);
}

let demo = null;
let playing = false;

function resetDemo() {
  try {
    demo = new Demo(Number($("grid").value), $("profile").value, Number($("size").value), Number($("width").value));
    $("status").textContent = "";
  } catch (e) {
    demo = null;
    $("status").textContent = String(e);
  }
  showDemo();
}

function showDemo() {
  if (!demo) return;
  draw($("field"), demo.heatmap(), demo.n());
  $("t").textContent = demo.t().toFixed(3);
  $("h2").textContent = fmt(demo.h2());
  $("k").textContent = fmt(demo.lipschitz());
  $("k0").textContent = fmt(demo.initial_lipschitz());
  $("d").textContent = fmt(demo.dissipation());
  $("max").textContent = fmt(demo.max_abs());
}

function tick() {
  if (!playing || !demo) return;
  try {
    demo.advance(0.05);
  } catch (e) {
    $("status").textContent = String(e);
    playing = false;
    $("play").textContent = "play";
  }
  showDemo();
  requestAnimationFrame(tick);
}

function showKernel() {
  const range = Number($("range").value);
  const res = 161;
  $("rangev").textContent = range;
  draw($("kernel"), kernel_bound_image(range, res), res);
  const [s, p] = kernel_bound_terms(Number($("ka").value), Number($("kb").value));
  $("ksum").textContent = s.toFixed(6);
  $("kprod").textContent = p.toFixed(6);
  const [m0, m1] = kernel_bound_maxima(range, res);
  $("kmax0").textContent = `${m0.toFixed(6)} (bound 2)`;
  $("kmax1").textContent = `${m1.toFixed(6)} (bound 2)`;
}

function verdict(el, ok, text) {
  el.textContent = text;
  el.className = ok ? "pass" : "fail";
}

function showSmallness() {
  const k = Number($("sk").value);
  const w = Number($("sw").value);
  const scale = 10 ** Number($("ss").value);
  $("skv").textContent = k.toFixed(1);
  $("swv").textContent = w.toFixed(2);
  $("ssv").textContent = scale.toExponential(2);
  try {
    const r = smallness_ridge(64, k, w, scale, Number($("sc").value));
    $("s_h2").textContent = fmt(r[0]);
    $("s_k").textContent = fmt(r[1]);
    verdict($("s_first"), r[2] < r[3], `${fmt(r[2])} vs ${fmt(r[3])}`);
    verdict($("s_second"), r[4] < r[5], fmt(r[4]));
    verdict($("s_pass"), r[6] === 1, r[6] === 1 ? "passes" : "fails");
    $("s_thr").textContent = Number.isNaN(r[7]) ? "none" : `${fmt(r[7])} (K0 there: ${fmt(r[7] * r[1] / scale)})`;
    $("status").textContent = "";
  } catch (e) {
    $("status").textContent = String(e);
  }
}

await init();
$("reset").onclick = resetDemo;
$("play").onclick = () => {
  playing = !playing;
  $("play").textContent = playing ? "pause" : "play";
  if (playing) requestAnimationFrame(tick);
};
for (const id of ["range", "ka", "kb"]) $(id).oninput = showKernel;
for (const id of ["sk", "sw", "ss", "sc"]) $(id).oninput = showSmallness;
resetDemo();
showKernel();
showSmallness();
