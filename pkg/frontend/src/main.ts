/** Page wiring: one campaign, optimistic refresh after every mutation. */

import { ApiError, CampaignApi, type CurveSample, type Suggestion } from './api.js';
import { collectScores } from './model.js';
import { renderHistory, renderStatus, renderSuggestions, showFormError } from './render.js';

function queryParam(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

const api = new CampaignApi(queryParam('api', ''));
const campaignId = queryParam('campaign', '');

const statusPane = document.getElementById('status') as HTMLElement;
const suggestionsPane = document.getElementById('suggestions') as HTMLElement;
const historyPane = document.getElementById('history') as HTMLElement;
const askButton = document.getElementById('ask') as HTMLButtonElement;

let suggestions: Suggestion[] = [];

async function incumbentCurve(): Promise<CurveSample | null> {
  try {
    return await api.getCurve(campaignId, 'incumbent');
  } catch {
    return null; // no observations yet
  }
}

async function refresh(): Promise<void> {
  const status = await api.getStatus(campaignId);
  renderStatus(statusPane, status);
  renderHistory(historyPane, await api.getHistory(campaignId));
  askButton.disabled = status.done;
  if (status.pending_tokens.length > 0 && suggestions.length === 0) {
    // a batch issued earlier (or by another window) is still open
    suggestions = await api.ask(campaignId);
  }
  renderSuggestions(suggestionsPane, suggestions, await incumbentCurve(), submitScores);
}

async function requestBatch(): Promise<void> {
  askButton.disabled = true;
  try {
    suggestions = await api.ask(campaignId);
    await refresh();
  } catch (error) {
    showFormError(suggestionsPane, describe(error));
  } finally {
    askButton.disabled = false;
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `${error.code}: ${error.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}

async function submitScores(entries: { token: string; raw: string }[]): Promise<void> {
  const collected = collectScores(entries);
  if (!collected.ok) {
    showFormError(suggestionsPane, `${collected.token}: ${collected.error}`);
    return;
  }
  try {
    await api.tell(campaignId, collected.scores);
    suggestions = [];
    await refresh();
  } catch (error) {
    // tokens are idempotency keys: retrying a lost response is safe, so the
    // form stays filled and the server's complaint is shown verbatim
    showFormError(suggestionsPane, describe(error));
  }
}

askButton.addEventListener('click', () => void requestBatch());
void refresh();
