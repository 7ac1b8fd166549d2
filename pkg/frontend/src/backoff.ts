/** Reconnect delay for the given attempt (1-based): exponential from
 * baseMs, capped at maxMs. Deterministic; at desk scale there is no
 * thundering herd to jitter against. */
export function reconnectDelayMs(attempt: number, baseMs = 500, maxMs = 30000): number {
  if (attempt < 1) return 0;
  return Math.min(baseMs * Math.pow(2, attempt - 1), maxMs);
}
