#pragma once

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace boolmin {

class spawn_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // captured stdout
    double elapsed_ms = 0.0;
};

/// Run argv[0] with the given arguments, capture stdout, and kill the
/// process if it exceeds the budget. Throws spawn_error when the
/// executable cannot be started.
inline ProcessResult run_process(const std::vector<std::string>& argv,
                                 std::optional<double> budget_ms = std::nullopt) {
    if (argv.empty()) throw spawn_error("empty argv");

    int out_pipe[2];
    int err_pipe[2];  // exec-failure reporting, CLOEXEC
    if (pipe(out_pipe) != 0) throw spawn_error("pipe failed");
    if (pipe(err_pipe) != 0) {
        close(out_pipe[0]);
        close(out_pipe[1]);
        throw spawn_error("pipe failed");
    }
    fcntl(err_pipe[1], F_SETFD, FD_CLOEXEC);

    auto start = std::chrono::steady_clock::now();
    pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
        throw spawn_error("fork failed");
    }
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        int err = errno;
        ssize_t ignored = write(err_pipe[1], &err, sizeof(err));
        (void)ignored;
        _exit(127);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);

    // If exec succeeded the CLOEXEC pipe closes empty; otherwise it carries
    // the child's errno.
    int exec_errno = 0;
    ssize_t got = read(err_pipe[0], &exec_errno, sizeof(exec_errno));
    close(err_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof(exec_errno))) {
        close(out_pipe[0]);
        waitpid(pid, nullptr, 0);
        throw spawn_error("cannot execute '" + argv[0] +
                          "': " + std::strerror(exec_errno));
    }

    ProcessResult result;
    auto deadline_exceeded = [&] {
        if (!budget_ms) return false;
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
        return ms > *budget_ms;
    };

    char buf[4096];
    bool open = true;
    while (open) {
        pollfd pfd{out_pipe[0], POLLIN, 0};
        int rc = poll(&pfd, 1, 50);
        if (rc > 0) {
            ssize_t n = read(out_pipe[0], buf, sizeof(buf));
            if (n > 0)
                result.output.append(buf, static_cast<std::size_t>(n));
            else
                open = false;
        }
        if (open && deadline_exceeded()) {
            kill(pid, SIGKILL);
            result.timed_out = true;
            // Drain whatever remains after the kill.
            ssize_t n;
            while ((n = read(out_pipe[0], buf, sizeof(buf))) > 0)
                result.output.append(buf, static_cast<std::size_t>(n));
            open = false;
        }
    }
    close(out_pipe[0]);

    int status = 0;
    waitpid(pid, &status, 0);
    result.elapsed_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (WIFEXITED(status))
        result.exit_code = WEXITSTATUS(status);
    else
        result.exit_code = -1;
    return result;
}

/// Temp file deleted on destruction.
class TempFile {
public:
    explicit TempFile(const std::string& contents, const char* suffix = ".tmp") {
        std::string tmpl = "/tmp/boolmin-XXXXXX";
        tmpl += suffix;
        // mkstemps keeps the suffix intact.
        int fd = mkstemps(tmpl.data(), static_cast<int>(std::strlen(suffix)));
        if (fd < 0) throw std::runtime_error("cannot create temp file");
        path_ = tmpl;
        std::size_t off = 0;
        while (off < contents.size()) {
            ssize_t n = write(fd, contents.data() + off, contents.size() - off);
            if (n <= 0) {
                close(fd);
                throw std::runtime_error("cannot write temp file");
            }
            off += static_cast<std::size_t>(n);
        }
        close(fd);
    }

    ~TempFile() {
        if (!path_.empty()) unlink(path_.c_str());
    }

    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace boolmin
