import { ERROR_KINDS, type ErrorKind, type OverviewResponse } from '../api';
import { clear, el, pct } from './dom';

export interface RegionStats {
  caseCount: number;
  correctCount: number;
}

export interface OverviewHandlers {
  onKindToggle(kind: ErrorKind): void;
}

/** Dataset overview: one tile per error kind plus corpus accuracy. When a
 * kind is selected the slice response (filtered to cases containing that
 * kind) is summarized underneath, and brushing adds region accuracy
 * aggregated client-side from the matching case entries. */
export function renderOverview(
  host: HTMLElement,
  full: OverviewResponse,
  slice: OverviewResponse | null,
  selectedKind: ErrorKind | null,
  region: RegionStats | null,
  handlers: OverviewHandlers,
): void {
  clear(host);
  const s = full.summary;
  host.appendChild(el('h2', {}, 'Dataset overview'));
  host.appendChild(
    el(
      'div',
      { class: 'accuracy-line' },
      `${s.total_cases} cases · ${s.correct_cases} correct, ${s.incorrect_cases} incorrect · accuracy ${pct(s.accuracy)}`,
    ),
  );

  const tiles = el('div', { class: 'kind-tiles' });
  for (const kind of ERROR_KINDS) {
    const tile = el('button', {
      class: `kind-tile${selectedKind === kind ? ' selected' : ''}`,
      'data-kind': kind,
      type: 'button',
    });
    tile.appendChild(el('span', { class: 'kind-name' }, kind));
    tile.appendChild(el('span', { class: 'kind-count' }, String(s.totals[kind] ?? 0)));
    tile.addEventListener('click', () => handlers.onKindToggle(kind));
    tiles.appendChild(tile);
  }
  host.appendChild(tiles);

  if (selectedKind && slice) {
    host.appendChild(
      el(
        'div',
        { class: 'slice-line' },
        `${slice.summary.total_cases} cases contain a ${selectedKind} error`,
      ),
    );
  }
  if (region) {
    const acc = region.caseCount ? region.correctCount / region.caseCount : null;
    host.appendChild(
      el(
        'div',
        { class: 'region-line' },
        `brushed region: ${region.caseCount} cases, accuracy ${pct(acc)}`,
      ),
    );
  }
}

export function renderError(host: HTMLElement, message: string, retry: () => void): void {
  clear(host);
  const box = el('div', { class: 'view-error' });
  box.appendChild(el('span', {}, message));
  const btn = el('button', { type: 'button', class: 'retry' }, 'retry');
  btn.addEventListener('click', retry);
  box.appendChild(btn);
  host.appendChild(box);
}
