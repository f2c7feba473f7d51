import { RaceViewModel } from "./raceView.js";
import { Gate } from "./types.js";

// Plain canvas drawing; everything scales to fit the track bounding box.

interface Fit {
  scale: number;
  ox: number;
  oy: number;
}

function fitView(view: RaceViewModel, w: number, h: number): Fit {
  let minX = -2, maxX = 2, minY = -2, maxY = 2;
  const consider = (x: number, y: number) => {
    minX = Math.min(minX, x); maxX = Math.max(maxX, x);
    minY = Math.min(minY, y); maxY = Math.max(maxY, y);
  };
  if (view.track) {
    consider(view.track.start.x, view.track.start.y);
    for (const g of view.track.gates) consider(g.center[0], g.center[1]);
  }
  for (const p of view.poses) consider(p.drone.x, p.drone.y);
  const margin = 2.0;
  minX -= margin; maxX += margin; minY -= margin; maxY += margin;
  const scale = Math.min(w / (maxX - minX), h / (maxY - minY));
  return { scale, ox: minX, oy: minY };
}

function gateEndpoints(g: Gate): [number, number, number, number] {
  // gate plane is vertical; its top-down footprint is the lateral segment
  const half = g.size / 2;
  const lx = -Math.sin(g.normal_yaw), ly = Math.cos(g.normal_yaw);
  return [
    g.center[0] - lx * half, g.center[1] - ly * half,
    g.center[0] + lx * half, g.center[1] + ly * half,
  ];
}

export function drawTopDown(ctx: CanvasRenderingContext2D, view: RaceViewModel, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, w, h);
  const fit = fitView(view, w, h);
  const X = (x: number) => (x - fit.ox) * fit.scale;
  const Y = (y: number) => h - (y - fit.oy) * fit.scale;

  if (view.track) {
    view.track.gates.forEach((g, i) => {
      const [x1, y1, x2, y2] = gateEndpoints(g);
      const passed = i < view.gatesPassed;
      ctx.strokeStyle = passed ? "#3ddc84" : "#e8b339";
      ctx.lineWidth = 3;
      ctx.beginPath();
      ctx.moveTo(X(x1), Y(y1));
      ctx.lineTo(X(x2), Y(y2));
      ctx.stroke();
      ctx.fillStyle = passed ? "#3ddc84" : "#aaa";
      ctx.font = "12px sans-serif";
      ctx.fillText(`${i + 1}${passed ? " ✓" : ""}`, X(g.center[0]) + 6, Y(g.center[1]) - 6);
    });
    ctx.fillStyle = "#6cf";
    ctx.beginPath();
    ctx.arc(X(view.track.start.x), Y(view.track.start.y), 4, 0, Math.PI * 2);
    ctx.fill();
  }

  if (view.poses.length > 1) {
    ctx.strokeStyle = "#58a6ff";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(X(view.poses[0].drone.x), Y(view.poses[0].drone.y));
    for (const p of view.poses) ctx.lineTo(X(p.drone.x), Y(p.drone.y));
    ctx.stroke();
  }

  const last = view.lastPose;
  if (last) {
    const px = X(last.drone.x), py = Y(last.drone.y);
    ctx.fillStyle = "#fff";
    ctx.beginPath();
    ctx.arc(px, py, 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.strokeStyle = "#fff";
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + 14 * Math.cos(-last.drone.yaw), py + 14 * Math.sin(-last.drone.yaw));
    ctx.stroke();
  }
}

export function drawAltitude(ctx: CanvasRenderingContext2D, view: RaceViewModel, w: number, h: number): void {
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, w, h);
  const zMax = Math.max(3.5, ...view.poses.map((p) => p.drone.z));
  ctx.strokeStyle = "#58a6ff";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  view.poses.forEach((p, i) => {
    const x = (i / Math.max(1, view.poses.length - 1)) * w;
    const y = h - (p.drone.z / zMax) * (h - 8) - 4;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#888";
  ctx.font = "11px sans-serif";
  ctx.fillText(`z max ${zMax.toFixed(1)} m`, 6, 14);
}
