#include "semcur/server.hpp"

#include "semcur/engine.hpp"
#include "semcur/error.hpp"
#include "semcur/protocol.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

namespace semcur
{
    namespace
    {
        namespace asio = boost::asio;
        namespace beast = boost::beast;
        namespace websocket = beast::websocket;
        using tcp = asio::ip::tcp;

        class Client : public std::enable_shared_from_this<Client>
        {
        public:
            using Inbox = std::function<void(std::shared_ptr<Client>, std::string)>;
            using Closed = std::function<void(std::shared_ptr<Client>)>;

            Client(tcp::socket socket, Inbox inbox, Closed closed)
                : m_ws(std::move(socket)), m_inbox(std::move(inbox)), m_closed(std::move(closed))
            {
            }

            void start(std::function<void(std::shared_ptr<Client>)> on_open)
            {
                m_ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
                m_ws.async_accept([self = shared_from_this(), on_open](beast::error_code ec) {
                    if (ec)
                        return;
                    on_open(self);
                    self->read();
                });
            }

            void send(std::string text)
            {
                asio::post(m_ws.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
                    self->m_outbox.push_back(std::move(text));
                    if (self->m_outbox.size() == 1)
                        self->write();
                });
            }

            void close()
            {
                asio::post(m_ws.get_executor(), [self = shared_from_this()] {
                    beast::error_code ec;
                    beast::get_lowest_layer(self->m_ws).socket().close(ec);
                });
            }

        private:
            void read()
            {
                m_ws.async_read(m_buffer, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                    if (ec)
                    {
                        self->m_closed(self);
                        return;
                    }
                    self->m_inbox(self, beast::buffers_to_string(self->m_buffer.data()));
                    self->m_buffer.consume(self->m_buffer.size());
                    self->read();
                });
            }

            void write()
            {
                m_ws.text(true);
                m_ws.async_write(asio::buffer(m_outbox.front()),
                                 [self = shared_from_this()](beast::error_code ec, std::size_t) {
                                     if (ec)
                                     {
                                         self->m_outbox.clear();
                                         return;
                                     }
                                     self->m_outbox.pop_front();
                                     if (!self->m_outbox.empty())
                                         self->write();
                                 });
            }

            websocket::stream<beast::tcp_stream> m_ws;
            beast::flat_buffer m_buffer;
            std::deque<std::string> m_outbox;
            Inbox m_inbox;
            Closed m_closed;
        };
    }

    struct Server::Impl
    {
        struct Inbound
        {
            std::shared_ptr<Client> from;
            std::string text;
        };

        explicit Impl(ServerOptions o) : options(std::move(o)), acceptor(io), signals(io, SIGINT, SIGTERM) {}

        ServerOptions options;
        asio::io_context io;
        tcp::acceptor acceptor;
        asio::signal_set signals;
        std::thread io_thread;
        std::thread engine_thread;
        std::atomic<bool> running{false};

        std::mutex clients_mutex;
        std::set<std::shared_ptr<Client>> clients;

        std::mutex queue_mutex;
        std::condition_variable queue_cv;
        std::deque<Inbound> queue;

        std::mutex done_mutex;
        std::condition_variable done_cv;
        bool done = false;

        std::ofstream log_file;
        std::chrono::steady_clock::time_point origin;

        Millis clock() const
        {
            return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - origin)
                .count();
        }

        void broadcast(const std::string &text)
        {
            std::lock_guard lock(clients_mutex);
            for (const auto &c : clients)
                c->send(text);
        }

        void accept()
        {
            acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
                if (ec)
                    return;
                auto client = std::make_shared<Client>(
                    std::move(socket),
                    [this](std::shared_ptr<Client> from, std::string text) {
                        {
                            std::lock_guard lock(queue_mutex);
                            queue.push_back({std::move(from), std::move(text)});
                        }
                        queue_cv.notify_one();
                    },
                    [this](std::shared_ptr<Client> c) {
                        std::lock_guard lock(clients_mutex);
                        clients.erase(c);
                    });
                client->start([this](std::shared_ptr<Client> c) {
                    c->send(protocol::hello(options.config));
                    std::lock_guard lock(clients_mutex);
                    clients.insert(std::move(c));
                });
                accept();
            });
        }

        void handle(Engine &engine, const Inbound &in)
        {
            const Millis now = std::max(clock(), engine.now());
            try
            {
                const auto msg = protocol::parse_client_message(in.text);
                if (const auto *m = std::get_if<protocol::Interact>(&msg))
                    engine.on_interaction(now,
                                          engine.abstract_event(m->kind, m->position, m->footprint, m->from,
                                                                m->height_mm),
                                          "abstract", m->participant);
                else if (const auto *m = std::get_if<protocol::DepthCommit>(&msg))
                {
                    const auto frame = m->frame ? *m->frame : load_depth_frame(options.frames_dir / *m->frame_ref);
                    engine.on_depth_frame(now, frame, m->participant);
                }
                else if (const auto *m = std::get_if<protocol::Say>(&msg))
                    engine.say(now, m->text);
                else if (const auto *m = std::get_if<protocol::Control>(&msg))
                    engine.control(now, m->action);
            }
            catch (const std::exception &e)
            {
                if (in.from)
                    in.from->send(protocol::error(e.what()));
            }
        }

        void engine_loop()
        {
            Engine engine(options.config, 0);
            auto persist = [this](const SessionEvent &ev) {
                if (log_file.is_open())
                    log_file << serialize_event(ev) << '\n' << std::flush;
                if (auto msg = protocol::event_message(ev))
                    broadcast(*msg);
            };
            for (const auto &ev : engine.log().events())
                persist(ev);
            engine.set_listener(persist);

            const auto frame_period =
                std::chrono::microseconds(static_cast<std::int64_t>(1e6 / options.config.frame_hz));
            auto next_frame = std::chrono::steady_clock::now();
            auto next_metrics = next_frame;
            while (running)
            {
                std::deque<Inbound> batch;
                {
                    std::unique_lock lock(queue_mutex);
                    queue_cv.wait_until(lock, next_frame, [this] { return !queue.empty() || !running; });
                    batch.swap(queue);
                }
                for (const auto &in : batch)
                    handle(engine, in);

                const auto t = std::chrono::steady_clock::now();
                if (t >= next_frame)
                {
                    engine.advance(std::max(clock(), engine.now()));
                    broadcast(protocol::scene_frame(engine));
                    next_frame = t + frame_period;
                }
                if (t >= next_metrics)
                {
                    broadcast(protocol::metrics_tick(engine.now(), compute_metrics(engine.log())));
                    next_metrics = t + std::chrono::seconds(1);
                }
            }
        }

        void finish()
        {
            std::lock_guard lock(done_mutex);
            done = true;
            done_cv.notify_all();
        }
    };

    Server::Server(ServerOptions options) : m_impl(std::make_unique<Impl>(std::move(options)))
    {
        m_impl->options.config.validate();
    }

    Server::~Server() { stop(); }

    void Server::start()
    {
        auto &s = *m_impl;
        if (!s.options.log_path.empty())
        {
            s.log_file.open(s.options.log_path, std::ios::binary | std::ios::trunc);
            if (!s.log_file)
                throw Error("cannot write session log " + s.options.log_path.string());
        }
        const tcp::endpoint endpoint(asio::ip::make_address(s.options.address), s.options.port);
        s.acceptor.open(endpoint.protocol());
        s.acceptor.set_option(asio::socket_base::reuse_address(true));
        s.acceptor.bind(endpoint);
        s.acceptor.listen(asio::socket_base::max_listen_connections);
        s.signals.async_wait([this](beast::error_code ec, int) {
            if (!ec)
                stop();
        });

        s.origin = std::chrono::steady_clock::now();
        s.running = true;
        s.accept();
        s.io_thread = std::thread([&s] { s.io.run(); });
        s.engine_thread = std::thread([&s] {
            try
            {
                s.engine_loop();
            }
            catch (const std::exception &e)
            {
                std::cerr << "engine stopped: " << e.what() << '\n';
            }
            s.finish();
        });
    }

    void Server::wait()
    {
        std::unique_lock lock(m_impl->done_mutex);
        m_impl->done_cv.wait(lock, [this] { return m_impl->done; });
    }

    void Server::stop()
    {
        auto &s = *m_impl;
        if (!s.running.exchange(false))
        {
            if (s.engine_thread.joinable() && s.engine_thread.get_id() != std::this_thread::get_id())
                s.engine_thread.join();
            return;
        }
        s.queue_cv.notify_all();
        asio::post(s.io, [&s] {
            beast::error_code ec;
            s.acceptor.close(ec);
            s.signals.cancel(ec);
            std::lock_guard lock(s.clients_mutex);
            for (const auto &c : s.clients)
                c->close();
        });
        if (s.engine_thread.joinable() && s.engine_thread.get_id() != std::this_thread::get_id())
            s.engine_thread.join();
        s.io.stop();
        if (s.io_thread.joinable() && s.io_thread.get_id() != std::this_thread::get_id())
            s.io_thread.join();
    }

    unsigned short Server::port() const { return m_impl->acceptor.local_endpoint().port(); }
}
