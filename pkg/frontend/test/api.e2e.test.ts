/**
 * End-to-end contract tests against a live campaign service.
 *
 * The suite boots the real Python service on a scratch directory and drives
 * it exactly the way the dashboard does: create -> ask -> render curves ->
 * submit scores -> watch the incumbent and order timeline move.
 */

import { type ChildProcess, spawn } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiError, CampaignApi } from '../src/api.js';
import { orderEvents } from '../src/model.js';

const PORT = 8400 + (process.pid % 2000);
const BASE = `http://127.0.0.1:${PORT}`;

let service: ChildProcess;
let root: string;
const api = new CampaignApi(BASE);

const CAMPAIGN_CONFIG = {
  campaign_id: 'ui-e2e',
  seed: 11,
  prior: { kind: 'increasing' },
  start_order: 5,
  max_order: 10,
  increment_period: 2, // force a scheduled order event on the second tell
  acquisition: { candidate_count: 150, refine_steps: 3, batch_size: 6 },
  rescale: { t_min: 0.0, t_max: 30.0, y_min: 1.0, y_max: 9.0 },
};

async function waitForService(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/campaigns/probe`);
      if (response.status > 0) return;
    } catch {
      if (Date.now() > deadline) throw new Error('service did not come up');
      await new Promise((r) => setTimeout(r, 200));
    }
  }
}

beforeAll(async () => {
  root = mkdtempSync(join(tmpdir(), 'bfosp-e2e-'));
  service = spawn(
    'python3',
    ['-m', 'bfosp.cli', 'serve', '--addr', `127.0.0.1:${PORT}`, '--root', root],
    { stdio: 'ignore' },
  );
  await waitForService();
}, 40000);

afterAll(() => {
  service?.kill();
  if (root) rmSync(root, { recursive: true, force: true });
});

describe('campaign dashboard flow', () => {
  it('creates a campaign and reads its status', async () => {
    const created = await api.createCampaign(CAMPAIGN_CONFIG);
    expect(created.campaign_id).toBe('ui-e2e');
    expect(created.current_order).toBe(5);
    expect(created.incumbent).toBeNull();

    const status = await api.getStatus('ui-e2e');
    expect(status.batch_size).toBe(6);
    expect(status.done).toBe(false);
  });

  it('asks for a batch of six renderable, shape-consistent curves', async () => {
    const suggestions = await api.ask('ui-e2e');
    expect(suggestions).toHaveLength(6);
    for (const s of suggestions) {
      expect(s.token).toMatch(/^ui-e2e-i0001-/);
      expect(s.curve.grid).toHaveLength(101);
      expect(s.curve.values).toHaveLength(101);
      // application units from the rescale record
      expect(s.curve.grid[0]).toBe(0);
      expect(s.curve.grid[100]).toBe(30);
      for (const v of s.curve.values) {
        expect(v).toBeGreaterThanOrEqual(1 - 1e-9);
        expect(v).toBeLessThanOrEqual(9 + 1e-9);
      }
      // increasing prior -> nondecreasing curve, as plotted
      for (let i = 1; i < s.curve.values.length; i++) {
        expect(s.curve.values[i]).toBeGreaterThanOrEqual(s.curve.values[i - 1] - 1e-9);
      }
    }

    // asking again returns the same unresolved batch
    const again = await api.ask('ui-e2e');
    expect(again.map((s) => s.token)).toEqual(suggestions.map((s) => s.token));
  });

  it('rejects a stale token with a protocol error the form can surface', async () => {
    await expect(api.tell('ui-e2e', { 'ui-e2e-i9999-0': 5 })).rejects.toThrowError(ApiError);
    try {
      await api.tell('ui-e2e', { 'ui-e2e-i9999-0': 5 });
    } catch (error) {
      const apiError = error as ApiError;
      expect(apiError.status).toBe(409);
      expect(apiError.code).toBe('protocol_error');
      expect(apiError.message).toContain('ui-e2e-i9999-0');
    }
  });

  it('submits scores, updates the incumbent, and survives a retry', async () => {
    const suggestions = await api.ask('ui-e2e');
    const scores: Record<string, number> = {};
    suggestions.forEach((s, i) => {
      scores[s.token] = i === 2 ? 9 : 4 + i * 0.5;
    });

    const status = await api.tell('ui-e2e', scores);
    expect(status.iterations_completed).toBe(1);
    expect(status.observation_count).toBe(6);
    expect(status.incumbent?.value).toBe(9);

    // a network retry of the same tell must not duplicate observations
    const retried = await api.tell('ui-e2e', scores);
    expect(retried.observation_count).toBe(6);

    const incumbentCurve = await api.getCurve('ui-e2e', 'incumbent', 51);
    expect(incumbentCurve.values).toHaveLength(51);
    expect(Math.max(...incumbentCurve.values)).toBeLessThanOrEqual(9 + 1e-9);
  });

  it('shows the order-elevation event in the history timeline', async () => {
    // second tell lands on the increment schedule (period 2)
    const suggestions = await api.ask('ui-e2e');
    const scores = Object.fromEntries(suggestions.map((s) => [s.token, 5]));
    const status = await api.tell('ui-e2e', scores);
    expect(status.current_order).toBe(6);
    expect(status.last_trigger).toBe('schedule');

    const records = await api.getHistory('ui-e2e');
    expect(records).toHaveLength(2);
    const events = orderEvents(records);
    expect(events).toEqual([
      { iteration: 2, from: 5, to: 6, reason: 'schedule', suppressed: false },
    ]);

    // incumbent survives elevation: history is re-expressed, not discarded
    expect(records[1].incumbent_value).toBe(9);
  });

  it('keeps serving the same state to a fresh client (server is the truth)', async () => {
    const fresh = new CampaignApi(BASE);
    const status = await fresh.getStatus('ui-e2e');
    expect(status.iterations_completed).toBe(2);
    expect(status.current_order).toBe(6);
    expect(status.pending_tokens.length).toBe(6);
  });

  it('propagates config errors with the server message', async () => {
    try {
      await api.createCampaign({ prior: { kind: 'zigzag' } });
      expect.unreachable('invalid config must be rejected');
    } catch (error) {
      const apiError = error as ApiError;
      expect(apiError.status).toBe(400);
      expect(apiError.code).toBe('config_error');
    }
  });
});
