/**
 * Single UI state store. Socket events and user input both funnel through
 * here; the render loop reads it. The UI holds no physics of its own:
 * every displayed quantity arrives in server frames.
 */
export function initialState() {
    return {
        status: "disconnected",
        scenario: "",
        banner: "",
        frame: null,
        selectedMember: null,
        selectedNodes: [],
        recording: false,
        framesSeen: 0,
    };
}
export class Store {
    state = initialState();
    listeners = [];
    subscribe(fn) {
        this.listeners.push(fn);
    }
    emit() {
        for (const fn of this.listeners)
            fn();
    }
    setStatus(status, banner = "") {
        this.state.status = status;
        this.state.banner = banner;
        this.emit();
    }
    applyHello(hello) {
        this.state.scenario = hello.scenario;
        this.state.status = hello.operator ? "connected" : "observer";
        this.emit();
    }
    applyFrame(frame) {
        // frames are applied whole: the renderer never sees a partial update
        this.state.frame = frame;
        this.state.framesSeen += 1;
        this.emit();
    }
    toggleNode(id) {
        const sel = this.state.selectedNodes;
        const at = sel.indexOf(id);
        if (at >= 0)
            sel.splice(at, 1);
        else {
            sel.push(id);
            while (sel.length > 2)
                sel.shift();
        }
        this.emit();
    }
    selectMember(id) {
        this.state.selectedMember = id;
        this.emit();
    }
    setRecording(on) {
        this.state.recording = on;
        this.emit();
    }
}
