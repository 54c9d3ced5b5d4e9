// Wire shapes, mirrored from the server's JSON documents.

export type TaskStatus = "todo" | "in_progress" | "done";
export type Priority = "high" | "medium" | "low";
export type RoleName = "admin" | "user";

export const STATUSES: readonly TaskStatus[] = ["todo", "in_progress", "done"];

export const STATUS_LABELS: Record<TaskStatus, string> = {
  todo: "To Do",
  in_progress: "In Progress",
  done: "Done",
};

export const PRIORITY_COLORS: Record<Priority, string> = {
  high: "#D32F2F",
  medium: "#F9A825",
  low: "#388E3C",
};

export const PRIORITY_RANK: Record<Priority, number> = {
  high: 0,
  medium: 1,
  low: 2,
};

export interface ActivityEntry {
  at: string;
  actor_id: string;
  kind: string;
  detail: string;
}

export interface AssetRef {
  id: string;
  content_hash: string;
  filename: string;
  media_type: string;
  size_bytes: number;
  uploaded_at: string;
  uploaded_by: string;
}

export interface Task {
  id: string;
  title: string;
  description: string;
  status: TaskStatus;
  priority: Priority;
  assignee_ids: string[];
  due_date: string | null;
  asset_refs: AssetRef[];
  activity: ActivityEntry[];
  trashed: boolean;
  created_at: string;
  updated_at: string;
  created_by: string;
  revision: number;
}

export interface Account {
  id: string;
  name: string;
  email: string;
  role: RoleName;
  active: boolean;
  created_at: string;
  revision: number;
}

export interface MutationEvent {
  seq: number;
  at: string;
  actor_id: string;
  entity_kind: "task" | "user";
  entity_id: string;
  op_kind: "upsert" | "hard_delete";
  snapshot?: Task | Account;
}

export interface DashboardSummary {
  total_tasks: number;
  todo_count: number;
  in_progress_count: number;
  done_count: number;
  completion_ratio: number;
}

export interface WorkloadRow {
  assignee_id: string;
  assignee_name: string;
  todo_count: number;
  in_progress_count: number;
  done_count: number;
  total: number;
}

export interface PriorityBreakdown {
  high_count: number;
  medium_count: number;
  low_count: number;
}

export interface ActivityItem {
  at: string;
  actor_id: string;
  kind: string;
  detail: string;
  task_id: string;
  task_title: string;
}

export interface ErrorBody {
  error: {
    code: string;
    message: string;
    details?: Record<string, unknown>;
  };
}
