import init, { optimalList, toyRegretCurves, misorderRegion } from "./pkg/ldr_demo.js";

const $ = (id) => document.getElementById(id);
const numbers = (text) => text.split(",").map((s) => Number(s.trim()));
const COLORS = { "ldr-randomized": "#1f77b4", rba: "#2ca02c", "pie-star": "#d62728" };

function solve() {
  const out = $("oracle-out");
  try {
    const v = JSON.parse(optimalList(
      Uint32Array.from(numbers($("topics").value)),
      Float64Array.from(numbers($("ctrs").value)),
      Float64Array.from(numbers($("phi").value)),
      Number($("slots").value),
    ));
    const rows = v.list.map((k, l) => `  slot ${l + 1}: item ${k}, click probability ${v.success_rates[l].toFixed(4)}`);
    const bound = v.lower_bound === null ? "n/a" : v.lower_bound.toFixed(4);
    out.className = "";
    out.textContent = `list (${v.list.join(", ")}), expected reward ${v.reward.toFixed(4)}\n${rows.join("\n")}\n` +
      `regret lower bound: ${bound} x ln T`;
  } catch (e) {
    out.className = "error";
    out.textContent = String(e);
  }
}

const TOY = [0.9, 0.8, 0.35, 0.3];

function buildSliders() {
  const box = $("ctr-sliders");
  TOY.forEach((value, i) => {
    const label = document.createElement("label");
    label.innerHTML = `CTR of item ${i + 1} <input type="range" min="0.01" max="0.99" step="0.01" value="${value}" id="ctr${i}">` +
      ` <output id="ctr${i}-value">${value.toFixed(2)}</output>`;
    box.appendChild(label);
    label.querySelector("input").addEventListener("input", (e) => {
      $(`ctr${i}-value`).textContent = Number(e.target.value).toFixed(2);
    });
  });
}

function chart(view) {
  const W = 640, H = 320, pad = 48;
  const xs = view.checkpoints;
  const top = Math.max(1e-9, ...view.series.flatMap((s) => s.q95));
  const x = (n) => pad + (Math.log(n) / Math.log(xs[xs.length - 1])) * (W - 2 * pad);
  const y = (r) => H - pad - (r / top) * (H - 2 * pad);
  let svg = `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}">`;
  svg += `<line x1="${pad}" y1="${H - pad}" x2="${W - pad}" y2="${H - pad}" stroke="#444"/>`;
  svg += `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${H - pad}" stroke="#444"/>`;
  svg += `<text x="${W / 2}" y="${H - 10}" text-anchor="middle">rounds (log scale), up to ${xs[xs.length - 1]}</text>`;
  svg += `<text x="${pad - 6}" y="${pad}" text-anchor="end">${top.toFixed(0)}</text>`;
  svg += `<text x="${pad - 6}" y="${H - pad}" text-anchor="end">0</text>`;
  for (const s of view.series) {
    const c = COLORS[s.policy] ?? "#555";
    const upper = xs.map((n, i) => `${x(n)},${y(s.q95[i])}`);
    const lower = xs.map((n, i) => `${x(n)},${y(s.q05[i])}`).reverse();
    svg += `<polygon points="${upper.concat(lower).join(" ")}" fill="${c}" fill-opacity="0.15"/>`;
    svg += `<polyline points="${xs.map((n, i) => `${x(n)},${y(s.mean[i])}`).join(" ")}" fill="none" stroke="${c}" stroke-width="2"/>`;
  }
  return svg + "</svg>";
}

function simulate() {
  const status = $("curves-status");
  status.className = "";
  status.textContent = "running...";
  // Let the status message paint before the synchronous simulation starts.
  setTimeout(() => {
    try {
      const started = performance.now();
      const view = JSON.parse(toyRegretCurves(
        Float64Array.from(TOY.map((_, i) => Number($(`ctr${i}`).value))),
        Number($("horizon").value),
        Number($("runs").value),
        Number($("seed").value),
      ));
      $("chart").innerHTML = chart(view);
      $("legend").innerHTML = view.series.map((s) => {
        const last = s.mean[s.mean.length - 1].toFixed(1);
        return `<span style="color:${COLORS[s.policy]}">&#9632; ${s.policy}: ${last}</span>`;
      }).join("");
      status.textContent = `done in ${((performance.now() - started) / 1000).toFixed(1)} s`;
    } catch (e) {
      status.className = "error";
      status.textContent = String(e);
    }
  }, 20);
}

function drawRegion() {
  const phi = Number($("misorder-phi").value);
  $("misorder-phi-value").textContent = phi.toFixed(2);
  const canvas = $("region");
  const n = canvas.width;
  const cells = misorderRegion(phi, n);
  const ctx = canvas.getContext("2d");
  const image = ctx.createImageData(n, n);
  const palette = [[235, 235, 235], [200, 225, 245], [230, 90, 80]];
  cells.forEach((cell, i) => {
    const [r, g, b] = palette[cell];
    image.data.set([r, g, b, 255], 4 * i);
  });
  ctx.putImageData(image, 0, 0);
  ctx.fillStyle = "#000";
  ctx.beginPath();
  ctx.arc(0.9 * n, (1 - 0.8) * n, 3, 0, 2 * Math.PI);
  ctx.fill();
}

await init();
buildSliders();
$("solve").addEventListener("click", solve);
$("simulate").addEventListener("click", simulate);
$("misorder-phi").addEventListener("input", drawRegion);
solve();
drawRegion();
