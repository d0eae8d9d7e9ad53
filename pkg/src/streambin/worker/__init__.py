from streambin.worker.state import ProcessingEngine, WorkerState, WorkerNotReady

__all__ = ["ProcessingEngine", "WorkerState", "WorkerNotReady"]
