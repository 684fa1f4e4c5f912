import type { InstanceResponse } from '../api';
import { clear, el } from './dom';

// Instance view: the original question next to the model's reasoning paths
// and the reference paths. Entity chips are outlined solid when the entity
// was mentioned in the case and dashed otherwise; steps that triggered
// detections carry a badge naming the error kinds.

export function renderInstance(
  host: HTMLElement,
  data: InstanceResponse | null,
  entityName: (id: string) => string,
  stale: boolean,
  onRefresh: () => void,
): void {
  clear(host);
  host.appendChild(el('h2', {}, 'Instance'));

  if (stale) {
    const note = el('div', { class: 'stale-note' });
    note.appendChild(el('span', {}, 'this case is no longer in the current run'));
    const btn = el('button', { type: 'button', class: 'refresh' }, 'refresh');
    btn.addEventListener('click', onRefresh);
    note.appendChild(btn);
    host.appendChild(note);
    return;
  }
  if (!data) {
    host.appendChild(el('div', { class: 'empty-state' }, 'open a case from the table'));
    return;
  }

  const inst = data.instance;
  const qa = el('div', { class: 'qa-popup' });
  qa.appendChild(el('div', { class: 'case-title' }, inst.case_id));
  qa.appendChild(el('p', { class: 'question' }, inst.question));
  const opts = el('ul', { class: 'options' });
  for (const option of inst.options) {
    const marks: string[] = [];
    if (option === inst.correct_answer) marks.push('correct');
    if (option === inst.predicted_answer) marks.push('predicted');
    opts.appendChild(el('li', { class: marks.join(' ') }, option));
  }
  qa.appendChild(opts);
  host.appendChild(qa);

  const diagram = el('div', { class: 'instance-diagram' });

  for (const [i, path] of inst.reference_paths.entries()) {
    const row = el('div', { class: 'path-row reference', 'data-path': `ref-${i}` });
    row.appendChild(el('span', { class: 'path-tag' }, 'reference'));
    path.nodes.forEach((node, j) => {
      row.appendChild(chip(node, entityName(node), path.mentioned[j]));
      if (j < path.relations.length) {
        row.appendChild(el('span', { class: 'relation-label' }, `—${path.relations[j]}→`));
      }
    });
    diagram.appendChild(row);
  }

  for (const [i, path] of inst.model_paths.entries()) {
    const erroneous = path.steps.some((s) => s.incoming_error_kinds.length > 0);
    const row = el('div', {
      class: `path-row observed ${erroneous ? 'erroneous' : 'clean'}`,
      'data-path': `model-${i}`,
    });
    row.appendChild(el('span', { class: 'path-tag' }, 'model'));
    path.steps.forEach((step, j) => {
      if (j > 0 && step.incoming_error_kinds.length > 0) {
        row.appendChild(
          el('span', { class: 'step-badge' }, step.incoming_error_kinds.join(', ')),
        );
      }
      row.appendChild(chip(step.entity, entityName(step.entity), step.mentioned));
      if (j < path.steps.length - 1) {
        row.appendChild(el('span', { class: 'relation-label' }, `—${step.relation_label}→`));
      }
    });
    if (path.dropped_steps > 0) {
      row.appendChild(el('span', { class: 'dropped' }, `(${path.dropped_steps} unaligned steps dropped)`));
    }
    diagram.appendChild(row);
  }

  if (inst.missing_entities.length > 0) {
    const row = el('div', { class: 'path-row missing' });
    row.appendChild(el('span', { class: 'path-tag' }, 'missing'));
    for (const m of inst.missing_entities) {
      row.appendChild(chip(m, entityName(m), false));
    }
    diagram.appendChild(row);
  }

  host.appendChild(diagram);
}

function chip(entityId: string, name: string, mentioned: boolean): HTMLElement {
  return el(
    'span',
    {
      class: `chip ${mentioned ? 'mentioned' : 'unmentioned'}`,
      'data-entity': entityId,
      'data-mentioned': String(mentioned),
    },
    name,
  );
}
