import type { ProjectionResponse } from '../api';
import { clear, el, px, svgEl } from './dom';

// View constants. The heat raster and dot layer share one unit-square
// coordinate system scaled to SIZE; y grows downward in SVG, so unit y is
// flipped to keep the grid's row order and the layout's y axis aligned.
export const SIZE = 480;
const DOT_MIN_R = 5;
const DOT_MAX_R = 16;
const HEAT_CUTOFF = 1e-9;

export interface ProjectionHandlers {
  onTopK(k: number): void;
  onBrush(entityIds: string[]): void;
}

export function toPixel(ux: number, uy: number): { x: number; y: number } {
  return { x: ux * SIZE, y: (1 - uy) * SIZE };
}

/** Entities whose unit coordinates fall inside a normalized brush rect. */
export function entitiesInRect(
  data: ProjectionResponse,
  x0: number,
  y0: number,
  x1: number,
  y1: number,
): string[] {
  const [lo_x, hi_x] = x0 <= x1 ? [x0, x1] : [x1, x0];
  const [lo_y, hi_y] = y0 <= y1 ? [y0, y1] : [y1, y0];
  const hit: string[] = [];
  data.entities.forEach((eid, i) => {
    const ux = data.x[i];
    const uy = data.y[i];
    if (ux >= lo_x && ux <= hi_x && uy >= lo_y && uy <= hi_y) hit.push(eid);
  });
  return hit;
}

export function renderProjection(
  host: HTMLElement,
  data: ProjectionResponse,
  topK: number,
  handlers: ProjectionHandlers,
): void {
  clear(host);
  host.appendChild(el('h2', {}, 'Projection'));

  if (data.entities.length === 0) {
    host.appendChild(el('div', { class: 'empty-state' }, 'no projected entities in this run'));
    return;
  }

  const controls = el('div', { class: 'controls' });
  const label = el('label', {}, `top-k error nodes: ${topK}`);
  const slider = el('input', {
    type: 'range',
    min: 0,
    max: 20,
    value: topK,
    class: 'k-slider',
  });
  slider.addEventListener('change', () => handlers.onTopK(Number(slider.value)));
  controls.appendChild(label);
  controls.appendChild(slider);
  host.appendChild(controls);

  const svg = svgEl('svg', {
    viewBox: `0 0 ${SIZE} ${SIZE}`,
    width: SIZE,
    height: SIZE,
    class: 'projection-canvas',
  });

  // heat raster: one rect per cell that carries mass
  const grid = data.grid;
  const cellW = SIZE / grid.width;
  const cellH = SIZE / grid.height;
  let maxHeat = 0;
  for (const v of grid.values) if (v > maxHeat) maxHeat = v;
  const heat = svgEl('g', { class: 'heat' });
  if (maxHeat > 0) {
    for (let row = 0; row < grid.height; row++) {
      for (let col = 0; col < grid.width; col++) {
        const v = grid.values[row * grid.width + col];
        if (v <= HEAT_CUTOFF) continue;
        heat.appendChild(
          svgEl('rect', {
            x: px(col * cellW),
            y: px(SIZE - (row + 1) * cellH),
            width: px(cellW),
            height: px(cellH),
            fill: '#c23b22',
            'fill-opacity': (v / maxHeat).toFixed(4),
          }),
        );
      }
    }
  }
  svg.appendChild(heat);

  // top-k dots above the raster
  const byId = new Map(data.entities.map((eid, i) => [eid, i]));
  const maxCount = data.top.reduce((m, t) => Math.max(m, t.count), 0);
  const dots = svgEl('g', { class: 'top-dots' });
  for (const t of data.top) {
    const i = byId.get(t.entity_id);
    if (i === undefined) continue;
    const { x, y } = toPixel(data.x[i], data.y[i]);
    const r = maxCount ? DOT_MIN_R + (DOT_MAX_R - DOT_MIN_R) * Math.sqrt(t.count / maxCount) : DOT_MIN_R;
    const dot = svgEl('circle', {
      cx: px(x),
      cy: px(y),
      r: px(r),
      class: 'top-dot',
      'data-entity': t.entity_id,
      'data-count': t.count,
    });
    dots.appendChild(dot);
    dots.appendChild(
      svgEl('text', { x: px(x + r + 2), y: px(y + 3), class: 'dot-label' }),
    ).textContent = data.names[i];
  }
  svg.appendChild(dots);

  // brush overlay: drag to select a rectangle in unit coordinates
  const overlay = svgEl('rect', {
    x: 0,
    y: 0,
    width: SIZE,
    height: SIZE,
    class: 'brush-overlay',
    fill: 'transparent',
  });
  let anchor: { x: number; y: number } | null = null;
  const marker = svgEl('rect', { class: 'brush-rect', display: 'none' });
  const toUnit = (ev: PointerEvent) => {
    const box = (svg as unknown as { getBoundingClientRect(): DOMRect }).getBoundingClientRect();
    const w = box.width || SIZE;
    const h = box.height || SIZE;
    return { x: (ev.clientX - box.left) / w, y: 1 - (ev.clientY - box.top) / h };
  };
  overlay.addEventListener('pointerdown', (ev) => {
    anchor = toUnit(ev as PointerEvent);
  });
  overlay.addEventListener('pointerup', (ev) => {
    if (!anchor) return;
    const end = toUnit(ev as PointerEvent);
    handlers.onBrush(entitiesInRect(data, anchor.x, anchor.y, end.x, end.y));
    anchor = null;
    marker.setAttribute('display', 'none');
  });
  svg.appendChild(marker);
  svg.appendChild(overlay);
  host.appendChild(svg);

  host.appendChild(
    el('div', { class: 'heat-legend' }, `heat max ${maxHeat.toPrecision(3)}`),
  );
}
