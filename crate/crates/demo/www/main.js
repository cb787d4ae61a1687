import init, { hypergraph, explainReaction, rankedPairs } from "./pkg/rxn_hypergraph_demo.js";

const SVG = "http://www.w3.org/2000/svg";
const COLORS = { atom: "#4a7bd0", mol: "#d08a2a", rxn: "#3a9a4a" };

function el(name, attrs, parent) {
  const e = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) e.setAttribute(k, v);
  parent.appendChild(e);
  return e;
}

function draw() {
  const svg = document.getElementById("graph");
  const err = document.getElementById("graph-error");
  svg.replaceChildren();
  err.textContent = "";
  const smirks = document.getElementById("smirks").value.trim();
  let layout, report;
  try {
    layout = JSON.parse(hypergraph(smirks));
    report = JSON.parse(explainReaction(smirks, document.getElementById("averaged").checked, 5));
  } catch (e) {
    err.textContent = e.message ?? String(e);
    return;
  }
  const pos = layout.positions;
  const score = new Map(report.atom_rxn.map((s) => [s.node, s.score]));
  const top = Math.max(...score.values(), 1e-12);

  for (const e of layout.graph.edges) {
    // Draw each undirected pair once; rxn nodes only receive edges.
    if (e.src > e.dst && layout.graph.nodes[e.dst].kind !== "rxn") continue;
    const [x1, y1] = pos[e.src];
    const [x2, y2] = pos[e.dst];
    el("line", { x1, y1, x2, y2, stroke: "#bbb", "stroke-width": 1 }, svg);
  }
  for (const n of layout.graph.nodes) {
    const [cx, cy] = pos[n.id];
    const r = n.kind === "atom" ? 11 : 16;
    const opacity = n.kind === "atom" ? 0.2 + 0.8 * (score.get(n.id) ?? 0) / top : 1;
    const c = el("circle", { cx, cy, r, fill: COLORS[n.kind], "fill-opacity": opacity }, svg);
    const title = n.kind === "atom" ? `${n.element} atom ${n.atom}, score ${score.get(n.id).toFixed(4)}` : `${n.side} ${n.kind}`;
    el("title", {}, c).textContent = title;
    const label = el("text", { x: cx, y: cy + 4, "text-anchor": "middle", "font-size": 11 }, svg);
    label.textContent = n.kind === "atom" ? n.element : n.kind === "mol" ? "M" + (n.agent ? "*" : "") : "X";
  }
  document.getElementById("pairs").textContent = report.atom_atom
    .map((p) => `${layout.graph.nodes[p.a].element}${p.a} - ${layout.graph.nodes[p.b].element}${p.b}  ${p.score.toFixed(4)}`)
    .join("\n");
}

function rank() {
  const out = document.getElementById("order");
  try {
    const r = JSON.parse(rankedPairs(document.getElementById("matrix").value));
    out.textContent = `order: ${r.order.join(" > ")}\nlocked: ${r.locked.map(([a, b]) => `${a}>${b}`).join(", ")}`;
  } catch (e) {
    out.textContent = e.message ?? String(e);
  }
}

await init();
document.getElementById("draw").addEventListener("click", draw);
document.getElementById("rank").addEventListener("click", rank);
draw();
rank();
