"""Team workflow service: kanban-style tasks with live sync, role-based
access, trash, file attachments, and dashboard aggregation — persisted as
plain JSON documents with an append-only event log."""

__version__ = "0.1.0"
