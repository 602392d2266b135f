#include "vistra/process.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>

#include "vistra/error.hpp"

namespace vistra {

ProcessResult run_shell(const std::string& command) {
    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0)
        throw AdapterError(std::string("pipe failed: ") + std::strerror(errno));
    if (pipe(err_pipe) != 0) {
        close(out_pipe[0]);
        close(out_pipe[1]);
        throw AdapterError(std::string("pipe failed: ") + std::strerror(errno));
    }

    const pid_t pid = fork();
    if (pid < 0)
        throw AdapterError(std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(out_pipe[1]);
    close(err_pipe[1]);

    ProcessResult result;
    std::array<pollfd, 2> fds{{{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}}};
    std::string* sinks[2] = {&result.out, &result.err};
    int open_fds = 2;
    std::array<char, 4096> buf;
    while (open_fds > 0) {
        if (poll(fds.data(), fds.size(), -1) < 0) {
            if (errno == EINTR)
                continue;
            break;
        }
        for (int i = 0; i < 2; ++i) {
            if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            const ssize_t n = read(fds[i].fd, buf.data(), buf.size());
            if (n > 0) {
                sinks[i]->append(buf.data(), static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                close(fds[i].fd);
                fds[i].fd = -1;
                --open_fds;
            }
        }
    }

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else if (WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);
    return result;
}

int count_placeholder(const std::string& tmpl, const std::string& name) {
    const std::string needle = "{" + name + "}";
    int n = 0;
    for (auto pos = tmpl.find(needle); pos != std::string::npos; pos = tmpl.find(needle, pos + needle.size()))
        ++n;
    return n;
}

std::string expand_template(const std::string& tmpl, const std::map<std::string, std::string>& values) {
    // Placeholders are "{" [a-z_]+ "}"; any other brace is copied literally
    // so shell parameter expansions such as ${var} survive.
    auto is_name = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || c == '_'; });
    };
    std::string out;
    out.reserve(tmpl.size() + 64);
    for (std::size_t i = 0; i < tmpl.size();) {
        const bool shell_var = i > 0 && tmpl[i - 1] == '$';
        const auto close = tmpl[i] == '{' && !shell_var ? tmpl.find('}', i) : std::string::npos;
        const std::string name = close == std::string::npos ? std::string() : tmpl.substr(i + 1, close - i - 1);
        if (!is_name(name)) {
            out += tmpl[i++];
            continue;
        }
        const auto it = values.find(name);
        if (it == values.end())
            throw ConfigError("unknown placeholder {" + name + "} in command template");
        out += it->second;
        i = close + 1;
    }
    return out;
}

} // namespace vistra
