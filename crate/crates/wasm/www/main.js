import init, { generate_map, Planner } from "./pkg/cellpath_wasm.js";

const $ = (id) => document.getElementById(id);
const grid = $("grid");
const front = $("front");
const CELL_PX = 14;

let mapText = null;
let planner = null;
let summary = null;
let selected = null; // last query report

function status(msg) {
  $("status").textContent = msg;
}

function firstFree(text) {
  const lines = text.trim().split("\n").slice(1);
  for (let r = 0; r < lines.length; r++) {
    const c = lines[r].split(" ").findIndex((t) => t !== "#");
    if (c >= 0) return [r, c];
  }
  return null;
}

function build(goal) {
  planner?.free();
  const t = performance.now();
  planner = new Planner(mapText, goal[0], goal[1]);
  summary = JSON.parse(planner.summary());
  selected = null;
  status(`database built in ${(performance.now() - t).toFixed(1)} ms, ` +
    `${summary.iterations} sweeps; click a cell to query it`);
  draw();
}

function generate() {
  try {
    mapText = generate_map(+$("seed").value, +$("rows").value, +$("cols").value,
      +$("density").value, +$("maxcost").value);
    build(firstFree(mapText));
  } catch (e) {
    status(String(e));
  }
}

function draw() {
  const { rows, cols, cells } = summary;
  grid.width = cols * CELL_PX;
  grid.height = rows * CELL_PX;
  const g = grid.getContext("2d");
  const maxFront = Math.max(1, ...cells.map((c) => (c ? c.front : 0)));
  const covered = new Set((selected?.coverage ?? []).map(([r, c]) => r * cols + c));
  cells.forEach((cell, i) => {
    const x = (i % cols) * CELL_PX;
    const y = Math.floor(i / cols) * CELL_PX;
    if (!cell) {
      g.fillStyle = "#222";
    } else if (cell.front === 0) {
      g.fillStyle = "#ddd";
    } else {
      // heat: front size relative to the largest front on the map
      const t = cell.front / maxFront;
      g.fillStyle = `hsl(${220 - 200 * t}, 70%, ${85 - 35 * t}%)`;
    }
    g.fillRect(x, y, CELL_PX, CELL_PX);
    if (covered.has(i)) {
      g.strokeStyle = "#000";
      g.strokeRect(x + 3.5, y + 3.5, CELL_PX - 7, CELL_PX - 7);
    }
  });
  const mark = ([r, c], color) => {
    g.fillStyle = color;
    g.beginPath();
    g.arc(c * CELL_PX + CELL_PX / 2, r * CELL_PX + CELL_PX / 2, CELL_PX / 3, 0, 2 * Math.PI);
    g.fill();
  };
  summary.goal.forEach((c) => mark(c, "#0a0"));
  if (selected) mark(selected.start, "#d00");
  drawFront();
}

function drawFront() {
  const g = front.getContext("2d");
  g.clearRect(0, 0, front.width, front.height);
  g.strokeStyle = "#888";
  g.strokeRect(40, 10, front.width - 50, front.height - 50);
  g.fillStyle = "#222";
  g.fillText("length", front.width / 2, front.height - 12);
  g.fillText("terrain", 2, 20);
  const pts = selected?.front ?? [];
  if (pts.length === 0) return;
  const [x0, x1] = [pts[0][0], pts[pts.length - 1][0]];
  const [y1, y0] = [pts[0][1], pts[pts.length - 1][1]];
  const sx = (v) => 50 + ((v - x0) / Math.max(1, x1 - x0)) * (front.width - 70);
  const sy = (v) => front.height - 50 - ((v - y0) / Math.max(1, y1 - y0)) * (front.height - 70);
  g.strokeStyle = "#36c";
  g.beginPath();
  pts.forEach(([a, b], k) => (k ? g.lineTo(sx(a), sy(b)) : g.moveTo(sx(a), sy(b))));
  g.stroke();
  g.fillStyle = "#c30";
  pts.forEach(([a, b]) => g.fillRect(sx(a) - 3, sy(b) - 3, 6, 6));
  g.fillStyle = "#222";
  g.fillText(`${x0}`, 40, front.height - 30);
  g.fillText(`${x1}`, front.width - 30, front.height - 30);
  g.fillText(`${y0}`, 5, front.height - 50);
  g.fillText(`${y1}`, 5, 35);
}

grid.addEventListener("click", (ev) => {
  if (!summary) return;
  const r = Math.floor(ev.offsetY / CELL_PX);
  const c = Math.floor(ev.offsetX / CELL_PX);
  if (!summary.cells[r * summary.cols + c]) return;
  try {
    if ($("pickgoal").checked) {
      $("pickgoal").checked = false;
      build([r, c]);
      return;
    }
    selected = JSON.parse(planner.query(r, c));
    const counts = (selected.counts ?? []).map((e) => `  [${e.vector}]  ${e.count}`).join("\n");
    $("details").textContent =
      `start ${r},${c}: ${selected.front.length} front vectors, ` +
      `${selected.total_paths} optimal paths, ${selected.coverage.length} covered cells\n` +
      `vector  paths\n${counts}`;
    draw();
  } catch (e) {
    status(String(e));
  }
});

$("generate").addEventListener("click", generate);

await init();
generate();
