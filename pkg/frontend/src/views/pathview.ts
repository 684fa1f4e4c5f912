import type { ErrorKind, NodeLinksResponse, PathViewResponse } from '../api';
import { ERROR_KINDS } from '../api';
import { clear, el, px, svgEl } from './dom';
import { SIZE, toPixel } from './projection';

// Glyph geometry constants (documented UI choices, not derived from data):
// outer ring is an annulus split into a reference half and an observed half,
// inner sectors grow with per-kind error intensity.
const GLYPH_MIN_R = 9;
const GLYPH_MAX_R = 22;
const RING_THICKNESS = 5;
const INNER_GAP = 2;

const KIND_COLOR: Record<ErrorKind, string> = {
  Relation: '#c23b22',
  Branch: '#d9772e',
  Missing: '#2f5fa8',
};
const REF_COLOR = '#2e8540';
const OBS_ERR_COLOR = '#c23b22';
const OBS_OK_COLOR = '#8a8a8a';

// Fixed 120-degree budgets per kind keep sectors comparable across glyphs.
const SECTOR_SPAN: Record<ErrorKind, [number, number]> = {
  Relation: [0, 120],
  Branch: [120, 240],
  Missing: [240, 360],
};

function polar(cx: number, cy: number, r: number, angleDeg: number): { x: number; y: number } {
  const rad = ((angleDeg - 90) * Math.PI) / 180;
  return { x: cx + r * Math.cos(rad), y: cy + r * Math.sin(rad) };
}

function sectorPath(cx: number, cy: number, r: number, a0: number, a1: number): string {
  const p0 = polar(cx, cy, r, a0);
  const p1 = polar(cx, cy, r, a1);
  const large = a1 - a0 > 180 ? 1 : 0;
  return `M ${px(cx)} ${px(cy)} L ${px(p0.x)} ${px(p0.y)} A ${px(r)} ${px(r)} 0 ${large} 1 ${px(p1.x)} ${px(p1.y)} Z`;
}

function ringPath(cx: number, cy: number, r0: number, r1: number, a0: number, a1: number): string {
  const o0 = polar(cx, cy, r1, a0);
  const o1 = polar(cx, cy, r1, a1);
  const i0 = polar(cx, cy, r0, a1);
  const i1 = polar(cx, cy, r0, a0);
  const large = a1 - a0 > 180 ? 1 : 0;
  return (
    `M ${px(o0.x)} ${px(o0.y)} A ${px(r1)} ${px(r1)} 0 ${large} 1 ${px(o1.x)} ${px(o1.y)} ` +
    `L ${px(i0.x)} ${px(i0.y)} A ${px(r0)} ${px(r0)} 0 ${large} 0 ${px(i1.x)} ${px(i1.y)} Z`
  );
}

export interface PathViewHandlers {
  onMinIntensity(value: number): void;
  onSelectNode(entityId: string): void;
}

export function renderPathView(
  host: HTMLElement,
  data: PathViewResponse,
  kindFilter: ErrorKind | null,
  minIntensity: number,
  selectedNode: string | null,
  links: NodeLinksResponse | null,
  handlers: PathViewHandlers,
): void {
  clear(host);
  host.appendChild(el('h2', {}, 'Path view'));

  const maxIntensity = data.nodes.reduce((m, n) => Math.max(m, n.total_intensity), 0);
  const controls = el('div', { class: 'controls' });
  controls.appendChild(el('label', {}, `min error intensity: ${minIntensity}`));
  const slider = el('input', {
    type: 'range',
    min: 0,
    max: Math.max(maxIntensity, minIntensity, 1),
    value: minIntensity,
    class: 'intensity-slider',
  });
  slider.addEventListener('change', () => handlers.onMinIntensity(Number(slider.value)));
  controls.appendChild(slider);
  host.appendChild(controls);

  if (data.nodes.length === 0) {
    host.appendChild(
      el('div', { class: 'empty-state' }, 'no nodes at this intensity; lower the slider'),
    );
    return;
  }

  const svg = svgEl('svg', {
    viewBox: `0 0 ${SIZE} ${SIZE}`,
    width: SIZE,
    height: SIZE,
    class: 'path-canvas',
  });
  svg.appendChild(buildArrowDefs());

  const coords = new Map(
    data.nodes.map((n) => [n.entity_id, toPixel(n.x, n.y)] as const),
  );

  const edgeLayer = svgEl('g', { class: 'edges' });
  for (const edge of data.edges) {
    const a = coords.get(edge.source);
    const b = coords.get(edge.target);
    if (!a || !b) continue;
    if (edge.reference_case_count > 0) {
      edgeLayer.appendChild(edgeLine(a, b, 'reference', REF_COLOR, edge.reference_case_count));
    }
    if (edge.observed_case_count > 0) {
      const erroneous = edge.error_kinds.length > 0;
      edgeLayer.appendChild(
        edgeLine(a, b, erroneous ? 'erroneous' : 'observed-ok',
          erroneous ? OBS_ERR_COLOR : OBS_OK_COLOR, edge.observed_case_count),
      );
    }
  }
  svg.appendChild(edgeLayer);

  // click-to-highlight layer from /links, drawn above the base edges
  if (links) {
    const hl = svgEl('g', { class: 'link-highlight' });
    for (const link of [...links.outgoing, ...links.incoming]) {
      const a = coords.get(link.source);
      const b = coords.get(link.target);
      if (!a || !b) continue;
      const color =
        link.family === 'reference' ? REF_COLOR : link.error_kinds.length ? OBS_ERR_COLOR : OBS_OK_COLOR;
      const line = edgeLine(a, b, `hl-${link.family}`, color, link.case_count);
      line.setAttribute('stroke-width', '3');
      hl.appendChild(line);
    }
    svg.appendChild(hl);
  }

  const maxOcc = data.nodes.reduce((m, n) => Math.max(m, n.total_occurrences), 0);
  const maxKind = data.nodes.reduce(
    (m, n) => Math.max(m, ...ERROR_KINDS.map((k) => n.intensity[k] ?? 0)),
    0,
  );

  const nodeLayer = svgEl('g', { class: 'glyphs' });
  for (const node of data.nodes) {
    const { x, y } = coords.get(node.entity_id)!;
    const r = maxOcc
      ? GLYPH_MIN_R + (GLYPH_MAX_R - GLYPH_MIN_R) * Math.sqrt(node.total_occurrences / maxOcc)
      : GLYPH_MIN_R;
    const innerR = r - RING_THICKNESS - INNER_GAP;
    const g = svgEl('g', {
      class: `glyph${selectedNode === node.entity_id ? ' selected' : ''}`,
      'data-entity': node.entity_id,
      'data-intensity': node.total_intensity,
    });

    g.appendChild(svgEl('circle', { cx: px(x), cy: px(y), r: px(r), class: 'glyph-bg' }));

    // left half: participation in reference reasoning paths
    if (node.reference_occurrences > 0) {
      g.appendChild(
        svgEl('path', {
          d: ringPath(x, y, r - RING_THICKNESS, r, 180, 360),
          fill: REF_COLOR,
          class: 'ring-ref',
        }),
      );
    }
    // right half: observed occurrences, split erroneous vs not
    const observed = node.observed_error_occurrences + node.observed_nonerror_occurrences;
    if (observed > 0) {
      const errSweep = (node.observed_error_occurrences / observed) * 180;
      if (errSweep > 0) {
        g.appendChild(
          svgEl('path', {
            d: ringPath(x, y, r - RING_THICKNESS, r, 0, errSweep),
            fill: OBS_ERR_COLOR,
            class: 'ring-error',
          }),
        );
      }
      if (errSweep < 180) {
        g.appendChild(
          svgEl('path', {
            d: ringPath(x, y, r - RING_THICKNESS, r, errSweep, 180),
            fill: OBS_OK_COLOR,
            class: 'ring-ok',
          }),
        );
      }
    }

    // inner sectors: per-kind error intensity, radius on a sqrt scale
    const kinds = kindFilter ? [kindFilter] : ERROR_KINDS;
    for (const kind of kinds) {
      const value = node.intensity[kind] ?? 0;
      if (value <= 0 || maxKind === 0 || innerR <= 0) continue;
      const sr = innerR * Math.sqrt(value / maxKind);
      const [a0, a1] = SECTOR_SPAN[kind];
      g.appendChild(
        svgEl('path', {
          d: sectorPath(x, y, sr, a0, a1),
          fill: KIND_COLOR[kind],
          class: `sector sector-${kind}`,
          'data-kind': kind,
          'data-value': value,
        }),
      );
    }

    g.appendChild(
      svgEl('title', {}),
    ).textContent = `${node.name} (${node.entity_kind}): intensity ${node.total_intensity}`;
    g.addEventListener('click', () => handlers.onSelectNode(node.entity_id));
    nodeLayer.appendChild(g);
  }
  svg.appendChild(nodeLayer);
  host.appendChild(svg);
}

function edgeLine(
  a: { x: number; y: number },
  b: { x: number; y: number },
  cls: string,
  color: string,
  count: number,
): SVGElement {
  return svgEl('line', {
    x1: px(a.x),
    y1: px(a.y),
    x2: px(b.x),
    y2: px(b.y),
    stroke: color,
    'stroke-width': Math.min(1 + count, 4),
    class: `edge ${cls}`,
    'data-count': count,
    'marker-end': 'url(#arrow)',
  });
}

function buildArrowDefs(): SVGElement {
  const defs = svgEl('defs');
  const marker = svgEl('marker', {
    id: 'arrow',
    viewBox: '0 0 8 8',
    refX: 7,
    refY: 4,
    markerWidth: 6,
    markerHeight: 6,
    orient: 'auto-start-reverse',
  });
  marker.appendChild(svgEl('path', { d: 'M 0 0 L 8 4 L 0 8 Z', fill: 'context-stroke' }));
  defs.appendChild(marker);
  return defs;
}
