import type { CaseSort, CasesResponse } from '../api';
import { clear, el } from './dom';

export interface CasesHandlers {
  onSort(sort: CaseSort): void;
  onSearch(text: string): void;
  onOpenCase(caseId: string): void;
}

/** Detail view: the case table. Sorting and search are request parameters,
 * so the table never reorders rows on its own. */
export function renderCases(
  host: HTMLElement,
  data: CasesResponse,
  sort: CaseSort,
  searchText: string,
  handlers: CasesHandlers,
): void {
  clear(host);
  host.appendChild(el('h2', {}, 'Cases'));

  const controls = el('div', { class: 'controls' });
  const search = el('input', {
    type: 'search',
    placeholder: 'search question or entity text',
    value: searchText,
    class: 'case-search',
  });
  search.addEventListener('change', () => handlers.onSearch(search.value));
  controls.appendChild(search);
  controls.appendChild(el('span', { class: 'case-total' }, `${data.total} cases`));
  host.appendChild(controls);

  const table = el('table', { class: 'case-table' });
  const head = el('tr');
  const columns: [string, CaseSort | null][] = [
    ['case', 'CaseIdAsc'],
    ['R', null],
    ['B', null],
    ['M', null],
    ['total', 'TotalErrorsDesc'],
    ['predicted', null],
    ['correct', null],
  ];
  for (const [label, sortKey] of columns) {
    const th = el('th', sortKey ? { class: sort === sortKey ? 'sorted' : 'sortable' } : {}, label);
    if (sortKey) th.addEventListener('click', () => handlers.onSort(sortKey));
    head.appendChild(th);
  }
  table.appendChild(head);

  for (const c of data.cases) {
    const tr = el('tr', {
      class: `case-row${c.correct ? '' : ' incorrect'}`,
      'data-case-id': c.case_id,
    });
    tr.appendChild(el('td', { class: 'case-id' }, c.case_id));
    tr.appendChild(el('td', {}, String(c.n_rel)));
    tr.appendChild(el('td', {}, String(c.n_br)));
    tr.appendChild(el('td', {}, String(c.n_miss)));
    tr.appendChild(el('td', {}, String(c.total_errors)));
    tr.appendChild(el('td', {}, c.predicted_answer));
    tr.appendChild(el('td', {}, c.correct_answer));
    tr.addEventListener('click', () => handlers.onOpenCase(c.case_id));
    table.appendChild(tr);
  }
  host.appendChild(table);

  if (data.cases.length === 0) {
    host.appendChild(el('div', { class: 'empty-state' }, 'no cases match the current filters'));
  }
}
