#include <wfchain/node/handler.hpp>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

extern char** environ;

namespace wfchain::node {

namespace {

HandlerOutcome run_command(const std::string& command, const worklist::WorkItem& item,
                           std::chrono::milliseconds timeout)
{
    int pipefd[2];
    if (::pipe2(pipefd, O_CLOEXEC) != 0) return {false, {}, std::string("pipe: ") + std::strerror(errno)};

    std::vector<std::string> env_strings;
    for (char** e = environ; *e != nullptr; ++e) {
        const std::string_view kv(*e);
        if (kv.starts_with("WF_CASE=") || kv.starts_with("WF_TRANSITION=") || kv.starts_with("WF_INPUTS=")) continue;
        env_strings.emplace_back(kv);
    }
    env_strings.push_back("WF_CASE=" + item.case_id);
    env_strings.push_back("WF_TRANSITION=" + item.transition);
    env_strings.push_back("WF_INPUTS=" + canonical_bytes(item.inputs));
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);

    std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
    char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, pipefd[1], STDOUT_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    pid_t pid = 0;
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, envp.data());
    posix_spawn_file_actions_destroy(&actions);
    ::close(pipefd[1]);
    if (rc != 0) {
        ::close(pipefd[0]);
        return {false, {}, std::string("spawn: ") + std::strerror(rc)};
    }

    std::string out;
    bool timed_out = false;
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    char buf[4096];
    while (true) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            timed_out = true;
            break;
        }
        pollfd p{pipefd[0], POLLIN, 0};
        const int n = ::poll(&p, 1, static_cast<int>(left.count()));
        if (n < 0 && errno == EINTR) continue;
        if (n == 0) continue;
        const auto got = ::read(pipefd[0], buf, sizeof buf);
        if (got < 0 && errno == EINTR) continue;
        if (got <= 0) break;
        out.append(buf, static_cast<std::size_t>(got));
    }
    ::close(pipefd[0]);
    if (timed_out) ::kill(pid, SIGKILL);
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (timed_out) return {false, {}, "handler timed out"};
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        return {false, {}, "handler exited with status " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1)};
    }
    try {
        auto outputs = parse_canonical(out);
        if (!outputs.is_object()) return {false, {}, "handler output is not a JSON object"};
        return {true, std::move(outputs), {}};
    } catch (const std::exception& e) {
        return {false, {}, std::string("handler output: ") + e.what()};
    }
}

} // namespace

HandlerOutcome invoke_handler(const HandlerSpec& spec, const worklist::WorkItem& item, std::chrono::milliseconds timeout)
{
    switch (spec.kind) {
    case HandlerSpec::Kind::Outputs: return {true, spec.outputs, {}};
    case HandlerSpec::Kind::Fail: return {false, {}, spec.fail_reason};
    case HandlerSpec::Kind::Command: return run_command(spec.command, item, timeout);
    }
    return {false, {}, "unknown handler kind"};
}

} // namespace wfchain::node
