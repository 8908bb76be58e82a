/** DOM rendering: thin layer over the view-model, no business logic.
 *
 * Curves are drawn exactly as the server sampled them - the client never
 * re-derives polynomial values.
 */

import type { CampaignStatus, CurveSample, IterationRecord, Suggestion } from './api.js';
import { curvePoints, incumbentSeries, orderEvents, sharedRange, summaryLine } from './model.js';

const SVG_NS = 'http://www.w3.org/2000/svg';
const PLOT_W = 420;
const PLOT_H = 180;

const CURVE_COLORS = ['#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd', '#8c564b'];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgPlot(curves: { curve: CurveSample; color: string; dashed?: boolean }[]): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, 'svg');
  svg.setAttribute('viewBox', `0 0 ${PLOT_W} ${PLOT_H}`);
  svg.setAttribute('class', 'curve-plot');
  const { yMin, yMax } = sharedRange(curves.map((c) => c.curve));
  for (const { curve, color, dashed } of curves) {
    const line = document.createElementNS(SVG_NS, 'polyline');
    line.setAttribute('points', curvePoints(curve, PLOT_W, PLOT_H, yMin, yMax));
    line.setAttribute('fill', 'none');
    line.setAttribute('stroke', color);
    line.setAttribute('stroke-width', '1.5');
    if (dashed) line.setAttribute('stroke-dasharray', '6 3');
    svg.appendChild(line);
  }
  return svg;
}

export function renderStatus(container: HTMLElement, status: CampaignStatus): void {
  container.replaceChildren(
    el('h2', undefined, `Campaign ${status.campaign_id}`),
    el('p', 'summary', summaryLine(status)),
  );
}

export function renderSuggestions(
  container: HTMLElement,
  suggestions: Suggestion[],
  incumbentCurve: CurveSample | null,
  onSubmit: (entries: { token: string; raw: string }[]) => void,
): void {
  container.replaceChildren(el('h3', undefined, `Suggested batch (${suggestions.length})`));
  const layers = suggestions.map((s, i) => ({
    curve: s.curve,
    color: CURVE_COLORS[i % CURVE_COLORS.length],
  }));
  if (incumbentCurve) {
    layers.push({ curve: incumbentCurve, color: '#333333', dashed: true } as never);
  }
  if (layers.length > 0) {
    container.appendChild(svgPlot(layers));
  }

  const form = el('form', 'score-form');
  const inputs: { token: string; input: HTMLInputElement }[] = [];
  suggestions.forEach((s, i) => {
    const row = el('div', 'score-row');
    const swatch = el('span', 'swatch');
    swatch.style.background = CURVE_COLORS[i % CURVE_COLORS.length];
    const label = el('label', undefined, s.token);
    const input = el('input');
    input.type = 'text';
    input.name = s.token;
    input.placeholder = 'score';
    row.append(swatch, label, input);
    form.appendChild(row);
    inputs.push({ token: s.token, input });
  });
  if (suggestions.length > 0) {
    const submit = el('button', undefined, 'Submit scores');
    submit.type = 'submit';
    form.appendChild(submit);
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      onSubmit(inputs.map(({ token, input }) => ({ token, raw: input.value })));
    });
  }
  container.appendChild(form);
  container.appendChild(el('p', 'form-error'));
}

export function showFormError(container: HTMLElement, message: string): void {
  const slot = container.querySelector<HTMLElement>('.form-error');
  if (slot) slot.textContent = message;
}

export function renderHistory(container: HTMLElement, records: IterationRecord[]): void {
  container.replaceChildren(el('h3', undefined, 'History'));

  const events = orderEvents(records);
  const timeline = el('ul', 'order-timeline');
  for (const event of events) {
    const cls = event.suppressed ? 'order-event suppressed' : 'order-event';
    const text = event.suppressed
      ? `iteration ${event.iteration}: ${event.reason} trigger suppressed at order cap ${event.from}`
      : `iteration ${event.iteration}: order ${event.from} -> ${event.to} (${event.reason})`;
    timeline.appendChild(el('li', cls, text));
  }
  if (events.length === 0) {
    timeline.appendChild(el('li', 'order-event none', 'no order changes yet'));
  }
  container.appendChild(timeline);

  const table = el('table', 'history-table');
  const head = el('tr');
  for (const col of ['iter', 'order', 'trigger', 'incumbent', 'observed']) {
    head.appendChild(el('th', undefined, col));
  }
  table.appendChild(head);
  for (const r of [...records].reverse()) {
    const row = el('tr');
    row.appendChild(el('td', undefined, String(r.iteration)));
    row.appendChild(el('td', undefined, `${r.order_before}->${r.order_after}`));
    row.appendChild(el('td', undefined, r.trigger));
    row.appendChild(el('td', undefined, r.incumbent_value.toFixed(4)));
    row.appendChild(el('td', undefined, r.observed.map((v) => v.toFixed(3)).join(', ')));
    table.appendChild(row);
  }
  container.appendChild(table);

  const series = incumbentSeries(records);
  if (series.length > 1) {
    const spark: CurveSample = {
      grid: series.map((p) => p.iteration / series[series.length - 1].iteration),
      values: series.map((p) => p.value),
    };
    container.appendChild(el('h4', undefined, 'Incumbent over iterations'));
    container.appendChild(svgPlot([{ curve: spark, color: '#2ca02c' }]));
  }
}
