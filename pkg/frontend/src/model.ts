/** Pure view-model logic: everything here is testable without a DOM. */

import type { CampaignStatus, CurveSample, IterationRecord } from './api.js';

export interface OrderEvent {
  iteration: number;
  from: number;
  to: number;
  reason: string;
  suppressed: boolean;
}

/**
 * Order-elevation timeline: one entry per increment, plus entries for
 * triggers that fired at the order cap and were suppressed.
 */
export function orderEvents(records: IterationRecord[]): OrderEvent[] {
  const events: OrderEvent[] = [];
  for (const r of records) {
    if (r.order_after > r.order_before) {
      events.push({
        iteration: r.iteration,
        from: r.order_before,
        to: r.order_after,
        reason: r.trigger,
        suppressed: false,
      });
    } else if (r.suppressed_trigger) {
      events.push({
        iteration: r.iteration,
        from: r.order_before,
        to: r.order_before,
        reason: r.suppressed_trigger,
        suppressed: true,
      });
    }
  }
  return events;
}

/** Incumbent value per completed iteration, for the progress sparkline. */
export function incumbentSeries(records: IterationRecord[]): { iteration: number; value: number }[] {
  return records.map((r) => ({ iteration: r.iteration, value: r.incumbent_value }));
}

export type ScoreCheck = { ok: true; value: number } | { ok: false; error: string };

/** Client-side validation of a score entry before it goes near the server. */
export function validateScore(raw: string): ScoreCheck {
  const trimmed = raw.trim();
  if (trimmed === '') {
    return { ok: false, error: 'enter a score' };
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    return { ok: false, error: `'${trimmed}' is not a number` };
  }
  return { ok: true, value };
}

/**
 * Collect a full token -> score map from raw form entries; any invalid entry
 * aborts so a partial batch is never submitted.
 */
export function collectScores(
  entries: { token: string; raw: string }[],
): { ok: true; scores: Record<string, number> } | { ok: false; token: string; error: string } {
  const scores: Record<string, number> = {};
  for (const { token, raw } of entries) {
    const checked = validateScore(raw);
    if (!checked.ok) {
      return { ok: false, token, error: checked.error };
    }
    scores[token] = checked.value;
  }
  return { ok: true, scores };
}

/**
 * Map a curve into SVG polyline points for a width x height viewport.
 * The y-range is shared across curves so a batch plots on one scale.
 */
export function curvePoints(
  curve: CurveSample,
  width: number,
  height: number,
  yMin: number,
  yMax: number,
  pad = 4,
): string {
  const t0 = curve.grid[0];
  const t1 = curve.grid[curve.grid.length - 1];
  const spanT = t1 - t0 || 1;
  const spanY = yMax - yMin || 1;
  return curve.grid
    .map((t, i) => {
      const x = pad + ((t - t0) / spanT) * (width - 2 * pad);
      const y = height - pad - ((curve.values[i] - yMin) / spanY) * (height - 2 * pad);
      return `${x.toFixed(2)},${y.toFixed(2)}`;
    })
    .join(' ');
}

/** Shared y-range over several curves (falls back to [0, 1] when empty). */
export function sharedRange(curves: CurveSample[]): { yMin: number; yMax: number } {
  const values = curves.flatMap((c) => c.values);
  if (values.length === 0) {
    return { yMin: 0, yMax: 1 };
  }
  const yMin = Math.min(...values);
  const yMax = Math.max(...values);
  return yMin === yMax ? { yMin: yMin - 0.5, yMax: yMax + 0.5 } : { yMin, yMax };
}

export function summaryLine(status: CampaignStatus): string {
  const incumbent =
    status.incumbent === null ? 'no incumbent yet' : `incumbent ${status.incumbent.value}`;
  const progress = `${status.iterations_completed}/${status.max_iterations} iterations`;
  return `order ${status.current_order} · ${progress} · ${incumbent}${status.done ? ' · done' : ''}`;
}
