export interface ItemCard {
  id: string;
  title: string;
}

export interface SessionInfo {
  session_id: string;
  rater_id: string;
  stage: "SEEN_SELECTION" | "JUDGING";
}

export interface ItemPage {
  total: number;
  offset: number;
  limit: number;
  items: ItemCard[];
}

export interface SeenResponse {
  status: "ok" | "insufficient";
  stage: "SEEN_SELECTION" | "JUDGING";
  seen_count: number;
  min_seen: number;
}

export interface TaskView {
  task_id: string;
  rater_id: string;
  attribute: string;
  anchor: ItemCard;
  candidates: ItemCard[];
  created_at: number;
  tasks_done: number;
}

export interface JudgmentAck {
  status: string;
  seq: number;
  task_id: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}
