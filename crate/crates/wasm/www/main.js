import init, { ahpPriorities, staircase, compareRules } from "./pkg/ermcda_wasm.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (Number.isFinite(x) ? x.toFixed(4) : String(x));

function call(f, input) {
  try {
    return { ok: JSON.parse(f(JSON.stringify(input))) };
  } catch (e) {
    return { err: e.message ?? String(e) };
  }
}

// Pairwise judgments

const SAATY = [1 / 9, 1 / 7, 1 / 5, 1 / 3, 1, 3, 5, 7, 9];
const CRITERIA = ["occupants", "infrastructure", "hazard"];
const judgments = [3, 1 / 3, 1 / 5];

function saatyLabel(v) {
  return v >= 1 ? String(v) : `1/${Math.round(1 / v)}`;
}

function buildMatrix() {
  const t = $("ahp-matrix");
  const n = CRITERIA.length;
  t.innerHTML = "<tr><th></th>" + CRITERIA.map((c) => `<th>${c}</th>`).join("") + "</tr>";
  let k = 0;
  const index = {};
  for (let i = 0; i < n; i++) for (let j = i + 1; j < n; j++) index[`${i},${j}`] = k++;
  for (let i = 0; i < n; i++) {
    const tr = document.createElement("tr");
    tr.innerHTML = `<th>${CRITERIA[i]}</th>`;
    for (let j = 0; j < n; j++) {
      const td = document.createElement("td");
      if (i === j) td.textContent = "1";
      else if (i < j) {
        const sel = document.createElement("select");
        const at = index[`${i},${j}`];
        for (const v of SAATY) {
          const o = new Option(saatyLabel(v), v);
          if (Math.abs(v - judgments[at]) < 1e-9) o.selected = true;
          sel.add(o);
        }
        sel.onchange = () => {
          judgments[at] = Number(sel.value);
          buildMatrix();
          updateAhp();
        };
        td.appendChild(sel);
      } else td.textContent = saatyLabel(1 / judgments[index[`${j},${i}`]]);
      tr.appendChild(td);
    }
    t.appendChild(tr);
  }
}

function bars(canvas, labels, values) {
  const g = canvas.getContext("2d");
  g.clearRect(0, 0, canvas.width, canvas.height);
  const h = canvas.height / labels.length;
  g.font = "12px system-ui";
  labels.forEach((l, i) => {
    const w = (canvas.width - 170) * values[i];
    g.fillStyle = "#3b6ea8";
    g.fillRect(110, i * h + 4, w, h - 8);
    g.fillStyle = "#222";
    g.fillText(l, 4, i * h + h / 2 + 4);
    g.fillText(fmt(values[i]), 115 + w, i * h + h / 2 + 4);
  });
}

function updateAhp() {
  const r = call(ahpPriorities, { n: CRITERIA.length, judgments });
  const badge = $("ahp-cr");
  if (r.err) {
    $("ahp-notes").textContent = r.err;
    return;
  }
  bars($("ahp-bars"), CRITERIA, r.ok.weights);
  badge.textContent = fmt(r.ok.cr);
  badge.className = "badge " + (r.ok.acceptable ? "ok" : "bad");
  $("ahp-lambda").textContent = `λmax ${fmt(r.ok.lambda_max)}`;
  $("ahp-notes").textContent = r.ok.acceptable ? "" : "Judgments are inconsistent (CR above 0.1).";
}

// Expert interval and mapping

const CLASSES = [
  { atom: "NoS", trapezoid: ["-inf", "-inf", 0, 2] },
  { atom: "LS", trapezoid: [0, 2, 6, 10] },
  { atom: "MS", trapezoid: [6, 10, 14, 18] },
  { atom: "HS", trapezoid: [14, 18, "inf", "inf"] },
];
const COLORS = ["#6a9955", "#c5a600", "#d9822b", "#b3261e"];

function drawStaircase(out, query) {
  const c = $("poss-plot");
  const g = c.getContext("2d");
  const [x0, x1] = [0, 30];
  const X = (x) => 30 + ((x - x0) / (x1 - x0)) * (c.width - 40);
  const Y = (y) => c.height - 20 - y * (c.height - 40);
  g.clearRect(0, 0, c.width, c.height);
  g.strokeStyle = "#999";
  g.beginPath();
  g.moveTo(X(x0), Y(0));
  g.lineTo(X(x1), Y(0));
  g.stroke();
  g.fillStyle = "#555";
  g.font = "11px system-ui";
  for (let x = x0; x <= x1; x += 5) g.fillText(String(x), X(x) - 4, c.height - 5);

  // Class memberships.
  CLASSES.forEach((cl, k) => {
    const [a, b, cc, d] = cl.trapezoid.map((v) => (v === "-inf" ? x0 - 1 : v === "inf" ? x1 + 1 : v));
    g.strokeStyle = COLORS[k];
    g.setLineDash([4, 3]);
    g.beginPath();
    g.moveTo(X(a), Y(0));
    g.lineTo(X(b), Y(1));
    g.lineTo(X(cc), Y(1));
    g.lineTo(X(d), Y(0));
    g.stroke();
    g.fillStyle = COLORS[k];
    g.fillText(cl.atom, X(Math.max(x0, Math.min(x1, (b + cc) / 2))) - 8, Y(1) - 4);
  });
  g.setLineDash([]);

  // Possibility staircase: level of each ring from the widest inwards.
  g.fillStyle = "rgba(59,110,168,0.25)";
  g.strokeStyle = "#3b6ea8";
  for (const l of [...out.levels].reverse()) {
    g.fillRect(X(l.lo), Y(l.level), X(l.hi) - X(l.lo), Y(0) - Y(l.level));
    g.strokeRect(X(l.lo), Y(l.level), X(l.hi) - X(l.lo), Y(0) - Y(l.level));
  }
  if (query) {
    g.strokeStyle = "#222";
    g.lineWidth = 2;
    g.beginPath();
    g.moveTo(X(query.lo), Y(0) + 6);
    g.lineTo(X(query.hi), Y(0) + 6);
    g.stroke();
    g.lineWidth = 1;
    g.fillStyle = "#222";
    g.fillText(`N = ${fmt(query.necessity)}`, X(query.lo), Y(0) - 6);
  }
}

function updatePossibility() {
  const v = (id) => Number($(id).value);
  const input = {
    intervals: [
      { lo: v("in-lo"), hi: v("in-hi"), confidence: v("in-c") },
      { lo: v("out-lo"), hi: v("out-hi"), confidence: 1 },
    ],
    query: { lo: v("q-lo"), hi: v("q-hi") },
    classes: CLASSES,
  };
  const r = call(staircase, input);
  $("poss-error").textContent = r.err ?? "";
  if (r.err) return;
  drawStaircase(r.ok, r.ok.query);
  const q = r.ok.query;
  $("poss-measures").textContent =
    `N = ${fmt(q.necessity)}, Π = ${fmt(q.possibility)}, Bel = ${fmt(q.belief)}, Pl = ${fmt(q.plausibility)}`;
  $("poss-mapped").textContent = "mapped: " + r.ok.mapped.map((e) => `${e.element} ${fmt(e.mass)}`).join(", ");
}

// Fusion rules side by side

const ATOMS = ["A", "B", "C"];
const RULES = ["conjunctive", "dempster", "pcr5", "pcr6"];
const sources = [
  { reliability: 1, masses: { A: 0.9, B: 0, C: 0.1 } },
  { reliability: 1, masses: { A: 0, B: 0.9, C: 0.1 } },
];

function buildSources() {
  const t = $("src-table");
  t.innerHTML = "<tr><th></th>" + ATOMS.map((a) => `<th>${a}</th>`).join("") + "<th>reliability</th></tr>";
  sources.forEach((s, i) => {
    const tr = document.createElement("tr");
    tr.innerHTML = `<th>source ${i + 1}</th>`;
    for (const key of [...ATOMS, "reliability"]) {
      const td = document.createElement("td");
      const inp = document.createElement("input");
      Object.assign(inp, { type: "number", step: "0.05", min: "0", max: "1" });
      inp.value = key === "reliability" ? s.reliability : s.masses[key];
      inp.oninput = () => {
        if (key === "reliability") s.reliability = Number(inp.value);
        else s.masses[key] = Number(inp.value);
        updateFusion();
      };
      td.appendChild(inp);
      tr.appendChild(td);
    }
    t.appendChild(tr);
  });
}

function updateFusion() {
  const input = {
    atoms: ATOMS,
    rules: RULES,
    sources: sources.map((s) => {
      const masses = Object.fromEntries(Object.entries(s.masses).filter(([, m]) => m > 0));
      const rest = 1 - Object.values(masses).reduce((a, b) => a + b, 0);
      if (rest > 1e-9) masses["A+B+C"] = rest;
      return { reliability: s.reliability, masses };
    }),
  };
  const out = $("fusion-out");
  const r = call(compareRules, input);
  if (r.err) {
    out.innerHTML = `<tr><td class="err">${r.err}</td></tr>`;
    $("fusion-k").textContent = "";
    $("fusion-div").textContent = "";
    return;
  }
  $("fusion-k").textContent = fmt(r.ok.conflict);
  $("fusion-div").innerHTML = r.ok.divergent ? '<span class="badge bad">rules disagree</span>' : "";
  let html = "<tr><th>rule</th>" + ATOMS.map((a) => `<th>BetP(${a})</th>`).join("") + "<th>m(∅)</th><th>decision</th></tr>";
  for (const res of r.ok.results) {
    if (res.error) {
      html += `<tr><th>${res.rule}</th><td colspan="${ATOMS.length + 2}" class="err">${res.error}</td></tr>`;
      continue;
    }
    const betp = res.profile.atoms.map((a) => `<td>${fmt(a.betp)}</td>`).join("");
    html += `<tr><th>${res.rule}</th>${betp}<td>${fmt(res.empty)}</td><td>${res.profile.chosen}</td></tr>`;
  }
  out.innerHTML = html;
}

await init();
buildMatrix();
updateAhp();
for (const id of ["in-lo", "in-hi", "in-c", "out-lo", "out-hi", "q-lo", "q-hi"]) $(id).oninput = updatePossibility;
updatePossibility();
buildSources();
updateFusion();
