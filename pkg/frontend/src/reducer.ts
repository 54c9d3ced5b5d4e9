// The client's single source of truth and the pure reducer that feeds it.
//
// Every change the server makes arrives as a sequence-numbered event with a
// full snapshot. Applying events in order keeps `tasks`/`users` equal to the
// server's (redacted) state; duplicates are ignored and a skipped number
// means this client missed something and must refetch before trusting the
// stream again.

import type { Account, MutationEvent, Task, TaskStatus } from "./types.js";
import { PRIORITY_RANK, STATUSES } from "./types.js";

export type Connection = "live" | "reconnecting" | "offline";

export interface ClientState {
  token: string | null;
  me: Account | null;
  tasks: Record<string, Task>;
  users: Account[];
  lastSeenSeq: number;
  connection: Connection;
  /** Set when a sequence gap was observed; cleared by a full refetch. */
  needsRefetch: boolean;
}

export function initialState(): ClientState {
  return {
    token: null,
    me: null,
    tasks: {},
    users: [],
    lastSeenSeq: 0,
    connection: "offline",
    needsRefetch: false,
  };
}

function upsertUser(users: Account[], account: Account): Account[] {
  const next = users.filter((u) => u.id !== account.id);
  next.push(account);
  next.sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  return next;
}

export function applyEvent(state: ClientState, e: MutationEvent): ClientState {
  if (e.seq <= state.lastSeenSeq) {
    return state; // duplicate delivery (e.g. overlap across a reconnect)
  }
  if (e.seq !== state.lastSeenSeq + 1) {
    return { ...state, needsRefetch: true };
  }
  if (e.entity_kind === "task") {
    const tasks = { ...state.tasks };
    if (e.op_kind === "upsert") {
      tasks[e.entity_id] = e.snapshot as Task;
    } else {
      delete tasks[e.entity_id];
    }
    return { ...state, tasks, lastSeenSeq: e.seq };
  }
  const users =
    e.op_kind === "upsert"
      ? upsertUser(state.users, e.snapshot as Account)
      : state.users.filter((u) => u.id !== e.entity_id);
  return { ...state, users, lastSeenSeq: e.seq };
}

export function applyEvents(state: ClientState, events: MutationEvent[]): ClientState {
  let next = state;
  for (const e of events) {
    next = applyEvent(next, e);
  }
  return next;
}

/** Replace the entity maps wholesale after a refetch at a known sequence. */
export function resetState(
  state: ClientState,
  tasks: Task[],
  users: Account[],
  seq: number,
): ClientState {
  const map: Record<string, Task> = {};
  for (const t of tasks) {
    map[t.id] = t;
  }
  return {
    ...state,
    tasks: map,
    users: [...users].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0)),
    lastSeenSeq: seq,
    needsRefetch: false,
  };
}

export type BoardColumns = Record<TaskStatus, Task[]>;

function compareCards(a: Task, b: Task): number {
  const rank = PRIORITY_RANK[a.priority] - PRIORITY_RANK[b.priority];
  if (rank !== 0) return rank;
  if (a.created_at !== b.created_at) {
    return a.created_at < b.created_at ? -1 : 1;
  }
  return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
}

/**
 * The board: non-trashed tasks split into the three status columns, each
 * ordered by priority (high first), then age, then id.
 */
export function boardView(state: ClientState): BoardColumns {
  const columns: BoardColumns = { todo: [], in_progress: [], done: [] };
  for (const task of Object.values(state.tasks)) {
    if (!task.trashed) {
      columns[task.status].push(task);
    }
  }
  for (const status of STATUSES) {
    columns[status].sort(compareCards);
  }
  return columns;
}

export function trashedTasks(state: ClientState): Task[] {
  return Object.values(state.tasks)
    .filter((t) => t.trashed)
    .sort((a, b) => compareCards(a, b));
}

export function userById(state: ClientState, id: string): Account | undefined {
  return state.users.find((u) => u.id === id);
}
