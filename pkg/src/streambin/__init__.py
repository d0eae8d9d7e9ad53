"""streambin: a master/worker data-streaming framework whose processing-engine
placement and cluster scaling are driven by online First-Fit bin-packing over
profiled CPU usage."""

__version__ = "0.1.0"
