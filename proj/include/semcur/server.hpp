#pragma once

#include "semcur/config.hpp"

#include <filesystem>
#include <memory>
#include <string>

namespace semcur
{
    struct ServerOptions
    {
        EngineConfig config;
        std::string address = "127.0.0.1";
        unsigned short port = 0;              // 0 picks a free port
        std::filesystem::path log_path;       // empty: no persistence
        std::filesystem::path frames_dir = "."; // base for depth_commit frame_ref
    };

    /// Websocket endpoint around one engine. Client messages go through an
    /// ordered queue into a single engine thread; logged events, scene frames
    /// (throttled to frame_hz) and metrics ticks are pushed to every client.
    class Server
    {
    public:
        explicit Server(ServerOptions options);
        ~Server();

        Server(const Server &) = delete;
        Server &operator=(const Server &) = delete;

        /// Binds and starts the I/O and engine threads; returns once listening.
        void start();

        /// Blocks until stop() is called from another thread or a signal arrives.
        void wait();

        void stop();

        unsigned short port() const;

    private:
        struct Impl;
        std::unique_ptr<Impl> m_impl;
    };
}
