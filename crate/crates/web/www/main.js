import init, { Demo } from "./pkg/cvs_web.js";

const $ = (id) => document.getElementById(id);
const defaults = { none: 0, brightness: 1.15, jpeg: 85, patch: 0.1 };

let demo = null;
let passphrase = null;
let input = null;
let marked = null;
let candidate = null;

function show(img, bytes) {
  if (img.src) URL.revokeObjectURL(img.src);
  img.src = bytes ? URL.createObjectURL(new Blob([bytes], { type: "image/png" })) : "";
}

function currentDemo() {
  const p = $("pass").value;
  if (!demo || p !== passphrase) {
    demo = new Demo(p);
    passphrase = p;
  }
  return demo;
}

function setCandidate(bytes) {
  candidate = bytes;
  show($("cand-img"), bytes);
  $("verify").disabled = !bytes;
}

async function fileBytes(file) {
  return new Uint8Array(await file.arrayBuffer());
}

async function sampleImage() {
  const c = document.createElement("canvas");
  c.width = 640;
  c.height = 480;
  const g = c.getContext("2d");
  const grad = g.createLinearGradient(0, 0, 640, 480);
  grad.addColorStop(0, "#3a6ea5");
  grad.addColorStop(1, "#f4d35e");
  g.fillStyle = grad;
  g.fillRect(0, 0, 640, 480);
  for (let i = 0; i < 60; i++) {
    g.fillStyle = `hsl(${(i * 47) % 360} 60% 50% / 0.6)`;
    g.beginPath();
    g.arc((i * 97) % 640, (i * 61) % 480, 10 + (i * 13) % 50, 0, 2 * Math.PI);
    g.fill();
  }
  const blob = await new Promise((r) => c.toBlob(r, "image/png"));
  return new Uint8Array(await blob.arrayBuffer());
}

function useInput(bytes) {
  input = bytes;
  show($("orig-img"), bytes);
  $("register").disabled = false;
}

function run(out, fn) {
  try {
    fn();
  } catch (e) {
    out.className = "";
    out.textContent = `error: ${e.message ?? e}`;
  }
}

$("file").onchange = async (e) => e.target.files[0] && useInput(await fileBytes(e.target.files[0]));
$("sample").onclick = async () => useInput(await sampleImage());
$("kind").onchange = () => ($("amount").value = defaults[$("kind").value]);

$("register").onclick = () => run($("reg-out"), () => {
  const t0 = performance.now();
  const r = currentDemo().register(input, $("who").value, Number($("alpha").value));
  const ms = performance.now() - t0;
  marked = r.png;
  show($("marked-img"), marked);
  setCandidate(marked);
  $("distort").disabled = false;
  $("reg-out").textContent =
    `Content ID: ${r.id}\nCanonical size: ${r.canonical}\nAlpha: ${r.alpha}\n` +
    `Pixel PSNR: ${r.psnr_db.toFixed(2)} dB\nTook ${ms.toFixed(0)} ms; ${demo.record_count} record(s) this session`;
  r.free();
});

$("distort").onclick = () => run($("ver-out"), () => {
  setCandidate(currentDemo().distort(marked, $("kind").value, Number($("amount").value)));
});

$("cand-file").onchange = async (e) => e.target.files[0] && setCandidate(await fileBytes(e.target.files[0]));

$("verify").onclick = () => run($("ver-out"), () => {
  const c = currentDemo().verify(candidate);
  $("ver-out").className = c.verdict;
  $("ver-out").textContent = c.text + "\n\n" + c.json;
  show($("qr-img"), c.extracted_png);
  show($("heat-img"), c.heatmap_png);
  c.free();
});

await init();
