// Placeholder entry point; the CLI is assembled once the runner exists.
int main() { return 0; }
