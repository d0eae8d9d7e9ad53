from streambin.master.state import MasterState, UnknownWorkerError, WorkerRecord, PeInfo

__all__ = ["MasterState", "UnknownWorkerError", "WorkerRecord", "PeInfo"]
