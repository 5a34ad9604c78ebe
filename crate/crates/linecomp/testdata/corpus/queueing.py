pending = []
served = 0

def enqueue(job):
    global pending
    pending.append(job)

def serve_one():
    global served
    if not pending:
        return None
    job = pending.pop(0)
    served += 1
    return job

def drain(limit):
    done = []
    while True:
        if len(done) >= limit:
            break
        job = serve_one()
        if job is None:
            break
        if job == "skip":
            continue
        done.append(job)
    return done

def reset():
    global pending, served
    del pending[:]
    served = 0

def stats():
    return {"pending": len(pending), "served": served}
