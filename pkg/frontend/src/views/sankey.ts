import type { ExpandMode, ExpandResponse } from '../api';
import { clear, el, px, svgEl } from './dom';

// Comparative Sankey: anchor on the left, error-side category bands in the
// middle column, reference-side bands on the right. Flow width is strictly
// linear in supporting-case count so widths stay comparable across bands.
export const PX_PER_CASE = 28;
const MIN_BAND_H = 2;
const BAND_GAP = 12;
const COL_X = { anchor: 30, err: 330, ref: 640 };
const COL_W = 150;
const TOP_PAD = 48;
const WIDTH = 840;

export interface BandTarget {
  entity: string;
  cases: number;
}

export interface Band {
  category: string;
  targets: BandTarget[];
  totalCases: number;
}

export interface SankeyModel {
  anchor: string;
  errorBands: Band[];
  refBands: Band[];
}

function buildBands(
  targets: string[],
  pairs: { target: string; case_ids: string[] }[],
  categories: Record<string, string>,
): Band[] {
  const caseCount = new Map<string, number>();
  for (const pair of pairs) {
    caseCount.set(pair.target, (caseCount.get(pair.target) ?? 0) + pair.case_ids.length);
  }
  const byCategory = new Map<string, BandTarget[]>();
  for (const target of targets) {
    const category = categories[target] ?? 'uncategorized';
    const list = byCategory.get(category) ?? [];
    list.push({ entity: target, cases: caseCount.get(target) ?? 0 });
    byCategory.set(category, list);
  }
  return [...byCategory.entries()]
    .map(([category, ts]) => ({
      category,
      targets: ts.sort((a, b) => b.cases - a.cases || (a.entity < b.entity ? -1 : 1)),
      totalCases: ts.reduce((s, t) => s + t.cases, 0),
    }))
    .sort((a, b) => b.totalCases - a.totalCases || (a.category < b.category ? -1 : 1));
}

export function buildSankeyModel(data: ExpandResponse): SankeyModel {
  const exp = data.expansion;
  return {
    anchor: exp.anchor,
    errorBands: buildBands(
      exp.error_targets,
      exp.related_error_pairs,
      data.summary?.categories_err ?? {},
    ),
    refBands: buildBands(
      exp.reference_targets,
      exp.related_reference_pairs,
      data.summary?.categories_ref ?? {},
    ),
  };
}

export interface SankeyHandlers {
  onExpand(mode: ExpandMode): void;
  onToggleCategory(side: 'err' | 'ref', category: string): void;
}

export function renderSankey(
  host: HTMLElement,
  data: ExpandResponse | null,
  expanded: Set<string>,
  entityName: (id: string) => string,
  handlers: SankeyHandlers,
  anchorCandidate: string | null = null,
): void {
  clear(host);
  host.appendChild(el('h2', {}, 'Error patterns'));

  if (!data && !anchorCandidate) {
    host.appendChild(
      el('div', { class: 'empty-state' }, 'select a node in the path view to expand its pattern'),
    );
    return;
  }

  const controls = el('div', { class: 'controls' });
  for (const mode of ['AlongErrorSet', 'AlongReferenceSet'] as ExpandMode[]) {
    const btn = el(
      'button',
      { type: 'button', class: 'expand-btn', 'data-mode': mode },
      mode === 'AlongErrorSet' ? 'expand error set' : 'expand reference set',
    );
    btn.addEventListener('click', () => handlers.onExpand(mode));
    controls.appendChild(btn);
  }
  host.appendChild(controls);

  if (!data) {
    host.appendChild(
      el('div', { class: 'empty-state' },
        `expand to see patterns around ${entityName(anchorCandidate!)}`),
    );
    return;
  }

  const model = buildSankeyModel(data);
  if (model.errorBands.length === 0 && model.refBands.length === 0) {
    host.appendChild(el('div', { class: 'empty-state' }, 'no recorded pattern around this node'));
    return;
  }

  const errH = layoutHeights(model.errorBands, expanded, 'err');
  const refH = layoutHeights(model.refBands, expanded, 'ref');
  const height = TOP_PAD + Math.max(errH.total, refH.total, PX_PER_CASE) + 20;
  const svg = svgEl('svg', {
    viewBox: `0 0 ${WIDTH} ${height}`,
    width: WIDTH,
    height,
    class: 'sankey-canvas',
  });

  const anchorH = Math.max(errH.total, refH.total, PX_PER_CASE);
  svg.appendChild(
    svgEl('rect', {
      x: COL_X.anchor,
      y: TOP_PAD,
      width: COL_W,
      height: px(anchorH),
      class: 'anchor-box',
      'data-entity': model.anchor,
    }),
  );
  svg.appendChild(
    svgEl('text', { x: COL_X.anchor + 6, y: TOP_PAD - 8, class: 'col-label' }),
  ).textContent = `${entityName(model.anchor)} · ${data.expansion.kind} · ${data.expansion.mode}`;

  drawSide(svg, model.errorBands, expanded, 'err', COL_X.err, errH, entityName, handlers,
    COL_X.anchor + COL_W, TOP_PAD + anchorH / 2);
  drawSide(svg, model.refBands, expanded, 'ref', COL_X.ref, refH, entityName, handlers,
    COL_X.anchor + COL_W, TOP_PAD + anchorH / 2);

  host.appendChild(svg);

  if (data.summary) {
    host.appendChild(el('div', { class: 'summary-text' }, data.summary.summary_text));
  }
}

interface SideLayout {
  total: number;
  bandY: number[];
  bandH: number[];
}

function layoutHeights(bands: Band[], expanded: Set<string>, side: string): SideLayout {
  const bandY: number[] = [];
  const bandH: number[] = [];
  let y = TOP_PAD;
  bands.forEach((band) => {
    const key = `${side}:${band.category}`;
    const base = Math.max(band.totalCases * PX_PER_CASE, MIN_BAND_H);
    const h = expanded.has(key)
      ? base + band.targets.length * 16 // expanded rows under the band
      : base;
    bandY.push(y);
    bandH.push(h);
    y += h + BAND_GAP;
  });
  return { total: Math.max(y - TOP_PAD - BAND_GAP, 0), bandY, bandH };
}

function drawSide(
  svg: SVGElement,
  bands: Band[],
  expanded: Set<string>,
  side: 'err' | 'ref',
  colX: number,
  layout: SideLayout,
  entityName: (id: string) => string,
  handlers: SankeyHandlers,
  flowX0: number,
  flowY0: number,
): void {
  bands.forEach((band, i) => {
    const key = `${side}:${band.category}`;
    const y = layout.bandY[i];
    const flowH = Math.max(band.totalCases * PX_PER_CASE, MIN_BAND_H);

    // ribbon first so the band rect sits on top of its end
    const midY = y + flowH / 2;
    const flow = svgEl('path', {
      d: `M ${px(flowX0)} ${px(flowY0)} C ${px((flowX0 + colX) / 2)} ${px(flowY0)}, ${px((flowX0 + colX) / 2)} ${px(midY)}, ${px(colX)} ${px(midY)}`,
      fill: 'none',
      class: `flow flow-${side}`,
      'stroke-width': px(flowH),
      'data-cases': band.totalCases,
      'data-category': band.category,
    });
    svg.appendChild(flow);

    const rect = svgEl('rect', {
      x: colX,
      y: px(y),
      width: COL_W,
      height: px(layout.bandH[i]),
      class: `band band-${side}`,
      'data-category': band.category,
      'data-cases': band.totalCases,
    });
    rect.addEventListener('click', () => handlers.onToggleCategory(side, band.category));
    svg.appendChild(rect);

    const label = svgEl('text', { x: colX + 6, y: px(y + 13), class: 'band-label' });
    label.textContent = `${band.category} (${band.targets.length} entities, ${band.totalCases} cases)`;
    svg.appendChild(label);

    if (expanded.has(key)) {
      band.targets.forEach((t, row) => {
        const ty = y + flowH + 13 + row * 16;
        const line = svgEl('text', {
          x: colX + 14,
          y: px(ty),
          class: 'band-entity',
          'data-entity': t.entity,
        });
        line.textContent = `${entityName(t.entity)} · ${t.cases} cases`;
        svg.appendChild(line);
      });
    }
  });
}
