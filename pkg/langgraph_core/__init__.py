# langgraph_core package
