import init, { Demo } from "./pkg/tomoqubo_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
let demo = null;

function draw(canvas, values, width, height) {
  const ctx = canvas.getContext("2d");
  const lo = Math.min(0, ...values);
  const hi = Math.max(...values);
  const span = hi > lo ? hi - lo : 1;
  const img = ctx.createImageData(width, height);
  values.forEach((v, k) => {
    const g = Math.round(255 * Math.min(1, Math.max(0, (v - lo) / span)));
    img.data.set([g, g, g, 255], 4 * k);
  });
  const off = new OffscreenCanvas(width, height);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function show(id, rec, n, extra = "") {
  draw($(id), rec.pixels(), n, n);
  $(`${id}-cap`).textContent =
    `${$(`${id}-cap`).textContent.split("\n")[0]}\nabs error ${rec.abs_error.toFixed(2)}${extra}`;
  rec.free();
}

function rebuild() {
  $("status").textContent = "";
  try {
    demo?.free();
    demo = new Demo(num("size"), num("blur"), num("threshold"), num("projections"),
      num("noise"), BigInt(num("seed")));
  } catch (e) {
    demo = null;
    $("status").textContent = String(e);
    return;
  }
  const n = demo.size;
  draw($("phantom"), demo.phantom(), n, n);
  $("phantom-cap").textContent = `phantom ${n}×${n}`;
  draw($("sinogram"), demo.sinogram(), demo.bins, demo.angles);
  $("sinogram-cap").textContent = `sinogram ${demo.angles} angles × ${demo.bins} bins`;
  show("fbp", demo.fbp(), n);
  show("sart", demo.sart(6), n);
  reconstruct();
}

function reconstruct() {
  if (!demo) return;
  $("status").textContent = "";
  try {
    const t0 = performance.now();
    const rec = demo.reconstruct(num("a"), num("b"), num("restarts"), num("sweeps"), BigInt(num("seed")));
    const ms = performance.now() - t0;
    const verdict = rec.error_free ? "  error-free" : "";
    const energies = `\nenergy ${rec.energy.toFixed(3)}\ntruth  ${rec.target_energy.toFixed(3)}\n${ms.toFixed(0)} ms${verdict}`;
    show("qubo", rec, demo.size, energies);
  } catch (e) {
    $("status").textContent = String(e);
  }
}

for (const id of ["a", "b"]) {
  $(id).addEventListener("input", () => { $(`${id}-val`).textContent = $(id).value; });
  $(id).addEventListener("change", reconstruct);
}
for (const id of ["size", "blur", "threshold", "projections", "noise", "seed"]) {
  $(id).addEventListener("change", rebuild);
}
$("run").addEventListener("click", reconstruct);

await init();
rebuild();
